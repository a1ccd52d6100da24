#include "roadcap/errors.hpp"
#include "roadcap/flow.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

using namespace roadcap;

namespace {

StructuredMesh small_atmosphere()
{
    std::vector<double> dz{1.0, 1.2, 1.44, 1.728, 2.0736, 2.48832, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 28.0};
    return StructuredMesh(std::vector<double>(24, 20.0), std::vector<double>(3, 20.0), dz,
                          RoadStrip{200.0, 220.0, 0.0, 60.0, 0.3});
}

} // namespace

TEST_SUITE("flow")
{
    TEST_CASE("log-law inlet formulas")
    {
        BoundarySet bc;
        bc.inlet = make_log_law_inlet(3.4, 10.0, 0.1);
        CHECK(bc.inlet.friction_velocity == doctest::Approx(0.3020506170777311).epsilon(1e-14));
        bc.inlet.friction_velocity = 0.3;
        const TurbulenceConstants tc;
        const auto v = inlet_profile(10.0, bc, tc);
        CHECK(v.u == doctest::Approx(3.3769174513472633).epsilon(1e-14));
        CHECK(v.k == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(v.epsilon == doctest::Approx(0.006520164211543104).epsilon(1e-14));
        CHECK(inlet_profile(0.0, bc, tc).u == 0.0);
        CHECK_THROWS_AS((void)inlet_profile(-1.0, bc, tc), ValidationError);
    }

    TEST_CASE("reference speed is recovered at the reference height")
    {
        BoundarySet bc;
        bc.inlet = make_log_law_inlet(3.4, 10.0, 0.1);
        CHECK(inlet_profile(10.0, bc, TurbulenceConstants{}).u == doctest::Approx(3.4).epsilon(1e-14));
    }

    TEST_CASE("eddy viscosity")
    {
        StructuredMesh m(std::vector<double>(2, 1.0), std::vector<double>(2, 1.0), std::vector<double>(2, 1.0),
                         RoadStrip{0.5, 0.5, 0.5, 0.5, 0.5});
        auto s = uniform_flow(m, {1.0, 0.0, 0.0}, 0.52, 0.3, FluidProperties{}, TurbulenceConstants{});
        for (double mt : s.mu_t) {
            CHECK(mt == doctest::Approx(0.097344).epsilon(1e-14));
        }
    }

    TEST_CASE("uniform flow is divergence free")
    {
        const auto m = small_atmosphere();
        const auto s = uniform_flow(m, {2.0, 0.5, 0.0}, 0.1, 0.01, FluidProperties{}, TurbulenceConstants{});
        for (double r : cell_mass_imbalance(s)) {
            REQUIRE(std::abs(r) < 1e-9);
        }
        const auto b = boundary_balance(s);
        CHECK(b.inflow == doctest::Approx(b.outflow).epsilon(1e-12));
    }

    TEST_CASE("parameter validation")
    {
        SolverConfig cfg;
        cfg.relax_pressure = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
        TurbulenceConstants tc;
        tc.c_mu = -0.09;
        CHECK_THROWS_AS(tc.validate(), ValidationError);
        FluidProperties f;
        f.viscosity = 0.0;
        CHECK_THROWS_AS(f.validate(), ValidationError);
    }

    TEST_CASE("small atmospheric run converges and conserves mass")
    {
        const auto m = small_atmosphere();
        const BoundarySet bc;
        SolverConfig cfg;
        cfg.max_iterations = 1500;
        const auto s = solve_flow(m, FluidProperties{}, bc, TurbulenceConstants{}, cfg);
        CHECK(s.converged);
        CHECK(s.residuals.back().max() < cfg.tolerance);
        const auto b = boundary_balance(s);
        double imbalance = 0.0;
        for (double r : cell_mass_imbalance(s)) {
            imbalance += std::abs(r);
        }
        CHECK(imbalance < cfg.tolerance * b.inflow);
        CHECK(std::all_of(s.k.begin(), s.k.end(), [](double v) { return v > 0.0; }));
        CHECK(std::all_of(s.epsilon.begin(), s.epsilon.end(), [](double v) { return v > 0.0; }));

        const auto dir = test::scratch_dir("flow");
        write_residual_csv(s, dir / "residuals.csv");
        write_flow_vtk(m, s, dir / "flow.vtk");
        std::ifstream vtk(dir / "flow.vtk");
        std::string line;
        std::getline(vtk, line);
        CHECK(line.rfind("# vtk DataFile", 0) == 0);
    }

    TEST_CASE("iteration budget exhaustion is reported, not thrown")
    {
        const auto m = small_atmosphere();
        SolverConfig cfg;
        cfg.max_iterations = 3;
        const auto s = solve_flow(m, FluidProperties{}, BoundarySet{}, TurbulenceConstants{}, cfg);
        CHECK_FALSE(s.converged);
        CHECK(s.iterations == 3);
        CHECK(s.residuals.size() == 3);
    }
}
