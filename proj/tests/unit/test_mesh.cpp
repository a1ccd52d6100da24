#include "roadcap/errors.hpp"
#include "roadcap/mesh.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace roadcap;

namespace {

std::size_t preset_cells(const std::string& name)
{
    const auto s = mesh_preset(name);
    return build_axis(s.x).size() * build_axis(s.y).size() * build_axis(s.z).size();
}

bool unimodal(const std::vector<double>& h)
{
    // Non-increasing, then non-decreasing.
    std::size_t i = 1;
    while (i < h.size() && h[i] <= h[i - 1] * (1.0 + 1e-12)) {
        ++i;
    }
    while (i < h.size() && h[i] >= h[i - 1] * (1.0 - 1e-12)) {
        ++i;
    }
    return i == h.size();
}

} // namespace

TEST_SUITE("mesh")
{
    TEST_CASE("uniform cube")
    {
        StructuredMesh m(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0), std::vector<double>(10, 1.0),
                         RoadStrip{4.0, 6.0, 0.0, 10.0, 0.5});
        CHECK(m.cell_count() == 1000);
        for (std::size_t c = 0; c < m.cell_count(); ++c) {
            REQUIRE(m.volume(c) == 1.0);
        }
        CHECK(m.lx() == 10.0);
        const auto q = m.quality();
        CHECK(q.max_adjacent_ratio == 1.0);
        CHECK(q.skewness == 0.0);
    }

    TEST_CASE("axis counts match the series-sum oracle")
    {
        const auto c = mesh_preset("coarse");
        CHECK(build_axis(c.x).size() == 79);
        CHECK(build_axis(c.y).size() == 32);
        CHECK(build_axis(c.z).size() == 25);
        const auto m = mesh_preset("medium");
        CHECK(build_axis(m.x).size() == 140);
        CHECK(build_axis(m.y).size() == 46);
        CHECK(build_axis(m.z).size() == 38);
        const auto p = mesh_preset("paper");
        CHECK(build_axis(p.x).size() == 307);
        CHECK(build_axis(p.y).size() == 90);
        CHECK(build_axis(p.z).size() == 70);
        GradedAxis lateral{300.0, 0.5, 5.0, 1.2, {130.0, 170.0}};
        CHECK(build_axis(lateral).size() == 148);
    }

    TEST_CASE("preset totals")
    {
        CHECK(preset_cells("coarse") == 63'200);
        CHECK(preset_cells("medium") == 244'720);
        const double paper = static_cast<double>(preset_cells("paper"));
        CHECK(std::abs(paper / reference_study_cell_count - 1.0) < 0.15);
        CHECK_THROWS_AS((void)mesh_preset("ultra"), ValidationError);
    }

    TEST_CASE("axes close the extent and grade unimodally")
    {
        for (const char* name : {"coarse", "medium", "paper"}) {
            const auto s = mesh_preset(name);
            for (const auto* ax : {&s.x, &s.y, &s.z}) {
                const auto h = build_axis(*ax);
                CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(ax->extent).epsilon(1e-12));
                CHECK(unimodal(h));
                const double hmax = *std::max_element(h.begin(), h.end());
                CHECK(hmax <= ax->max_spacing * (1.0 + 1e-12));
                for (std::size_t i = 1; i < h.size(); ++i) {
                    const double r = std::max(h[i], h[i - 1]) / std::min(h[i], h[i - 1]);
                    REQUIRE(r <= ax->growth_ratio * (1.0 + 1e-9));
                }
            }
        }
    }

    TEST_CASE("identical specs give identical meshes")
    {
        const auto a = build_mesh(mesh_preset("coarse"));
        const auto b = build_mesh(mesh_preset("coarse"));
        REQUIRE(a.cell_count() == b.cell_count());
        CHECK(std::equal(a.xf().begin(), a.xf().end(), b.xf().begin()));
        CHECK(std::equal(a.zf().begin(), a.zf().end(), b.zf().begin()));
        CHECK(a.road_cells() == b.road_cells());
    }

    TEST_CASE("road cells carry the whole strip")
    {
        const auto m = build_mesh(mesh_preset("coarse"));
        double share = 0.0;
        for (const auto& [c, w] : m.road_cells()) {
            const auto p = m.centre(c);
            CHECK(p.x >= m.road().x_min - 25.0);
            CHECK(p.x <= m.road().x_max + 25.0);
            share += w;
        }
        CHECK(share == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("budget and road placement are enforced")
    {
        auto s = mesh_preset("coarse");
        s.max_cells = 1000;
        CHECK_THROWS_AS((void)build_mesh(s), ResourceError);
        s = mesh_preset("coarse");
        s.road.x_min = 1300.0;
        s.road.x_max = 1310.0;
        CHECK_THROWS_AS((void)build_mesh(s), ValidationError);
    }

    TEST_CASE("locate and interpolate")
    {
        const auto m = build_mesh(mesh_preset("coarse"));
        const auto c = m.locate({612.0, 150.0, 2.0});
        REQUIRE(c);
        const auto p = m.centre(*c);
        CHECK(std::abs(p.x - 612.0) <= 0.5 * m.dx()[m.ijk(*c)[0]] + 1e-12);
        CHECK_FALSE(m.locate({-1.0, 0.0, 0.0}));
        std::vector<double> f(m.cell_count());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const auto q = m.centre(i);
            f[i] = 2.0 * q.x - 3.0 * q.y + 0.5 * q.z + 1.0;
        }
        // Linear fields are reproduced between centres.
        const Point3 probe{700.3, 121.7, 13.1};
        const auto v = m.interpolate(f, probe);
        REQUIRE(v);
        CHECK(*v == doctest::Approx(2.0 * probe.x - 3.0 * probe.y + 0.5 * probe.z + 1.0).epsilon(1e-12));
        CHECK_FALSE(m.interpolate(f, {0.0, 0.0, 400.0}));
    }

    TEST_CASE("cell volumes fill the domain")
    {
        const auto m = build_mesh(mesh_preset("coarse"));
        double total = 0.0;
        for (std::size_t c = 0; c < m.cell_count(); ++c) {
            total += m.volume(c);
        }
        CHECK(total == doctest::Approx(1225.5 * 300.0 * 300.0).epsilon(1e-12));
        CHECK(m.lx() == doctest::Approx(1225.5).epsilon(1e-14));
    }
}
