#include "roadcap/errors.hpp"
#include "roadcap/independence.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace roadcap;

namespace {

MeshSpec small_spec(const std::string& name, double h)
{
    MeshSpec s;
    s.name = name;
    s.x = {100.0, h, h, 1.2, {40.0, 60.0}};
    s.y = {60.0, h, h, 1.2, {20.0, 40.0}};
    s.z = {20.0, h, h, 1.2, {0.0, 1.0}};
    s.road = {45.0, 55.0, 0.0, 60.0, 0.3};
    return s;
}

// Analytic fields sampled on whatever mesh the level uses; linear in space so
// trilinear interpolation reproduces them exactly.
LevelSolver analytic(double scale = 1.0)
{
    return [scale](const MeshSpec& spec) {
        auto mesh = build_mesh(spec);
        std::vector<double> u(mesh.cell_count()), c(mesh.cell_count());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const auto p = mesh.centre(i);
            u[i] = 2.0 + 0.01 * p.y + 0.05 * p.z;
            c[i] = scale * (1e-6 + 1e-8 * p.x);
        }
        return LevelFields{std::move(mesh), std::move(u), std::move(c), true, 1};
    };
}

SampleLine line() { return {{50.0, 25.0, 2.0}, {50.0, 35.0, 2.0}, 41}; }

} // namespace

TEST_SUITE("independence")
{
    TEST_CASE("sample line has 41 evenly spaced points")
    {
        const auto l = default_sample_line(RoadStrip{600.0, 625.5, 0.0, 300.0, 0.3});
        const auto p = l.positions();
        REQUIRE(p.size() == 41);
        CHECK(p.front().x == 612.75);
        CHECK(p.front().y == 130.0);
        CHECK(p.back().y == 170.0);
        CHECK(p[1].y == doctest::Approx(131.0).epsilon(1e-14));
        CHECK(p[20].z == 2.0);
    }

    TEST_CASE("identical levels deviate by exactly zero and pass")
    {
        const auto spec = small_spec("a", 2.0);
        const auto r = independence_study({spec, spec}, analytic(), line());
        REQUIRE(r.pairs.size() == 1);
        CHECK(r.pairs[0].evaluated);
        CHECK(r.pairs[0].speed_deviation == 0.0);
        CHECK(r.pairs[0].concentration_deviation == 0.0);
        CHECK(r.pass);
    }

    TEST_CASE("different resolutions of a linear field agree")
    {
        const auto r = independence_study({small_spec("coarse", 4.0), small_spec("fine", 2.0)}, analytic(), line());
        CHECK(r.pairs[0].speed_deviation < 1e-12);
        CHECK(r.pairs[0].concentration_deviation < 1e-12);
        CHECK(r.pass);
    }

    TEST_CASE("a 6% perturbation fails and a 4% one passes")
    {
        LevelReport a{"a", 0, true, true, 1, "", std::vector<double>(41, 1.0), std::vector<double>(41, 2.0)};
        LevelReport b = a;
        b.concentration[17] = 2.0 / 1.06;
        auto p = compare_levels(a, b);
        CHECK(p.concentration_deviation == doctest::Approx(0.06).epsilon(1e-12));
        CHECK_FALSE(p.pass);
        b = a;
        b.speed[3] = 1.0 / 1.04;
        p = compare_levels(a, b);
        CHECK(p.speed_deviation == doctest::Approx(0.04).epsilon(1e-12));
        CHECK(p.pass);
        // Exactly at the threshold does not pass.
        b = a;
        b.speed[0] = 0.5;
        CHECK(compare_levels(a, b, 1.0).pass == false);
    }

    TEST_CASE("a failing level is reported and the study continues")
    {
        const auto good = analytic();
        LevelSolver flaky = [&](const MeshSpec& s) -> LevelFields {
            if (s.name == "broken") {
                throw DivergenceError("momentum", 12);
            }
            return good(s);
        };
        const auto r = independence_study(
            {small_spec("a", 4.0), small_spec("broken", 3.0), small_spec("c", 2.0), small_spec("d", 2.0)}, flaky,
            line());
        REQUIRE(r.levels.size() == 4);
        CHECK(r.levels[1].ok == false);
        CHECK(r.levels[1].error.find("momentum") != std::string::npos);
        CHECK(r.levels[2].ok);
        CHECK_FALSE(r.pairs[0].evaluated);
        CHECK_FALSE(r.pairs[1].evaluated);
        CHECK(r.pairs[2].evaluated);
        CHECK(r.pairs[2].pass);
        CHECK_FALSE(r.pass);
    }

    TEST_CASE("preconditions")
    {
        CHECK_THROWS_AS((void)independence_study({small_spec("a", 2.0)}, analytic(), line()), ValidationError);
        CHECK_THROWS_AS((void)max_relative_deviation({1.0}, {1.0, 2.0}), ValidationError);
        const auto mesh = build_mesh(small_spec("a", 2.0));
        SampleLine outside{{50.0, 25.0, 2.0}, {50.0, 95.0, 2.0}, 41};
        CHECK_THROWS_AS((void)sample_line(mesh, std::vector<double>(mesh.cell_count(), 1.0), outside),
                        ValidationError);
    }

    TEST_CASE("reports are written")
    {
        const auto r = independence_study({small_spec("a", 4.0), small_spec("b", 2.0)}, analytic(), line());
        const auto dir = test::scratch_dir("independence");
        write_independence_csv(r, dir / "samples.csv");
        write_independence_json(r, dir / "independence.json");
        CHECK(std::filesystem::file_size(dir / "samples.csv") > 0);
        CHECK(std::filesystem::file_size(dir / "independence.json") > 0);
    }
}
