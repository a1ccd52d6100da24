#include "roadcap/errors.hpp"
#include "roadcap/pipeline.hpp"
#include "support.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <fstream>

using namespace roadcap;

TEST_SUITE("pipeline")
{
    TEST_CASE("stage names round trip")
    {
        for (auto s : {Stage::emit, Stage::mesh, Stage::solve, Stage::disperse, Stage::capacity, Stage::calibrate}) {
            CHECK(parse_stage(stage_name(s)) == s);
        }
        CHECK_THROWS_AS((void)parse_stage("render"), ValidationError);
    }

    TEST_CASE("sha256 of a known string")
    {
        const auto dir = test::scratch_dir("pipeline_sha");
        std::ofstream(dir / "abc.txt") << "abc";
        CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK_THROWS_AS((void)sha256_file(dir / "missing.txt"), IoError);
    }

    TEST_CASE("early stages run and are listed in the manifest")
    {
        const auto cfg = load_config(test::source_dir() / "configs" / "g30ys.toml");
        const auto dir = test::scratch_dir("pipeline_mesh");
        const auto r = run_pipeline(cfg, dir, Stage::mesh);
        CHECK(r.exit_code == ExitCode::ok);
        REQUIRE(r.inventory.has_value());
        std::ifstream in(dir / "manifest.json");
        const auto j = nlohmann::json::parse(in);
        REQUIRE(j.size() == 3);
        CHECK(j[0]["artifact"] == "effective_config.toml");
        CHECK(j[1]["artifact"] == "inventory.csv");
        CHECK(j[2]["artifact"] == "mesh_summary.json");
        CHECK(j[2]["sha256"] == sha256_file(dir / "mesh_summary.json"));
    }

    TEST_CASE("non-convergence stops the run with exit code 3")
    {
        auto cfg = load_config(test::source_dir() / "configs" / "g30ys.toml");
        cfg.solver.max_iterations = 2;
        cfg.write_vtk = false;
        const auto dir = test::scratch_dir("pipeline_nonconv");
        const auto r = run_pipeline(cfg, dir);
        CHECK(r.exit_code == ExitCode::non_convergence);
        CHECK(r.failed_stage == "solve");
        CHECK(std::filesystem::exists(dir / "residuals.csv"));
        CHECK_FALSE(std::filesystem::exists(dir / "monitors.csv"));
        CHECK_FALSE(r.capacity.has_value());
    }

    TEST_CASE("unwritable output directory is an I/O failure")
    {
        const auto cfg = load_config(test::source_dir() / "configs" / "g30ys.toml");
        const auto dir = test::scratch_dir("pipeline_io");
        std::ofstream(dir / "file") << "x";
        const auto r = run_pipeline(cfg, dir / "file" / "sub", Stage::emit);
        CHECK(r.exit_code == ExitCode::io);
    }
}
