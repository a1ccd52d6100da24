#include "roadcap/config.hpp"
#include "roadcap/errors.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace roadcap;

TEST_SUITE("config")
{
    TEST_CASE("shipped scenario loads")
    {
        const auto cfg = load_config(test::source_dir() / "configs" / "g30ys.toml");
        CHECK(cfg.scenario == "g30ys");
        CHECK(cfg.traffic.annual_volume == 2'661'896.0);
        CHECK(cfg.mesh_preset_name == "coarse");
        CHECK(cfg.boundaries.inlet.reference_speed == 3.4);
        CHECK(cfg.capacity_monitor.distance_m == 600.0);
        CHECK(std::filesystem::exists(cfg.files.fleet));
        CHECK(cfg.constraints.ceiling[PollutantId::CO] == doctest::Approx(4e-6).epsilon(1e-15));
        CHECK_NOTHROW(cfg.validate());
    }

    TEST_CASE("defaults need no file")
    {
        const auto cfg = parse_config("", test::source_dir());
        CHECK(cfg.mesh.name == "coarse");
        CHECK(cfg.solver.tolerance == 1e-5);
        CHECK(cfg.background_fraction == 0.7);
    }

    TEST_CASE("unknown keys are all reported at once")
    {
        try {
            (void)parse_config("[solver]\ntolerance = 1e-6\nrelax_velocty = 0.5\n[inlet]\nspeed = 3\n", ".", false);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("solver.relax_velocty") != std::string::npos);
            CHECK(msg.find("inlet.speed") != std::string::npos);
        }
        CHECK_THROWS_AS((void)parse_config("[nonsense]\na = 1\n", ".", false), ConfigError);
    }

    TEST_CASE("concentration inputs need a unit tag")
    {
        const auto ok = parse_config("[capacity.constraints]\nCO = { value = 10.0, unit = \"mg/m3\" }\n", ".", false);
        CHECK(ok.constraints.ceiling[PollutantId::CO] == doctest::Approx(1e-5).epsilon(1e-15));
        CHECK_THROWS_AS((void)parse_config("[capacity.constraints]\nCO = { value = 10.0 }\n", ".", false), ConfigError);
        CHECK_THROWS_AS((void)parse_config("[capacity.constraints]\nCO = 10.0\n", ".", false), ConfigError);
    }

    TEST_CASE("type errors and bad values")
    {
        CHECK_THROWS_AS((void)parse_config("[solver]\ntolerance = \"small\"\n", ".", false), ConfigError);
        CHECK_THROWS_AS((void)parse_config("[mesh]\npreset = \"huge\"\n", ".", false), Error);
        CHECK_THROWS_AS((void)parse_config("[turbulence]\nmodel = \"les\"\n", ".", false), ConfigError);
        CHECK_THROWS_AS((void)parse_config("this is = = not toml", ".", false), ConfigError);
    }

    TEST_CASE("missing files are I/O errors when checked")
    {
        const std::string text = "[files]\nfleet = \"nowhere/fleet.csv\"\n";
        CHECK_THROWS_AS((void)parse_config(text, test::source_dir(), true), IoError);
        CHECK_NOTHROW((void)parse_config(text, test::source_dir(), false));
        CHECK_THROWS_AS((void)load_config("/nonexistent/run.toml"), IoError);
    }

    TEST_CASE("effective dump parses back to the same configuration")
    {
        const auto cfg = load_config(test::source_dir() / "configs" / "g30ys.toml");
        const auto dump = effective_config_dump(cfg);
        CHECK(dump.find("# paper:") != std::string::npos);
        const auto again = parse_config(dump, cfg.base_dir);
        CHECK(effective_config_dump(again) == dump);
    }

    TEST_CASE("preset switch keeps the road")
    {
        auto cfg = parse_config("[mesh]\nroad_x_min = 500.0\nroad_x_max = 520.0\n", ".", false);
        cfg.set_mesh_preset("medium");
        CHECK(cfg.mesh.name == "medium");
        CHECK(cfg.mesh.road.x_min == 500.0);
        CHECK(cfg.mesh_preset_name == "medium");
    }
}
