// Command-line front end: each subcommand runs the pipeline up to its stage.

#include "roadcap/independence.hpp"
#include "roadcap/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

using namespace roadcap;

namespace {

struct Options {
    std::string config;
    std::string out_dir{"out"};
    std::string preset;
    bool deterministic{false};
    std::optional<std::uint64_t> seed;
    bool dump_config{false};
    // calibrate only
    std::string simulated;
    std::string field;
    // independence only
    std::vector<std::string> levels{"coarse", "medium"};
};

void add_common(CLI::App* app, Options& o)
{
    app->add_option("--config", o.config, "TOML run configuration")->check(CLI::ExistingFile);
    app->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    app->add_option("--preset", o.preset, "Mesh preset")->check(CLI::IsMember({"coarse", "medium", "paper"}));
    app->add_flag("--deterministic", o.deterministic, "Fixed-order reductions and seeded sampling");
    app->add_option("--seed", o.seed, "Random seed for particle tracking");
    app->add_flag("--dump-config", o.dump_config, "Print the effective configuration and exit");
}

RunConfig make_config(const Options& o)
{
    RunConfig cfg = o.config.empty() ? parse_config("", ".") : load_config(o.config);
    if (!o.preset.empty()) {
        cfg.set_mesh_preset(o.preset);
    }
    if (o.deterministic) {
        cfg.deterministic = true;
        cfg.solver.deterministic_reductions = true;
    }
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.dpm.config.seed = *o.seed;
    }
    cfg.validate();
    return cfg;
}

int standalone_calibration(const Options& o)
{
    auto samples = read_simulated_csv(o.simulated);
    const auto background = background_policy(default_constraints());
    samples = add_background(std::move(samples), background);
    const auto report = calibrate(samples, read_field_csv(o.field));
    std::filesystem::create_directories(o.out_dir);
    write_calibration_csv(report, std::filesystem::path(o.out_dir) / "calibration.csv");
    std::cout << format_calibration_table(report);
    return 0;
}

int run(const Options& o, Stage stage)
{
    if (stage == Stage::calibrate && !o.simulated.empty()) {
        if (o.field.empty()) {
            throw ValidationError("--simulated requires --field");
        }
        return standalone_calibration(o);
    }
    const auto cfg = make_config(o);
    if (o.dump_config) {
        std::cout << effective_config_dump(cfg);
        return 0;
    }
    const auto result = run_pipeline(cfg, o.out_dir, stage);
    for (const auto& e : result.manifest) {
        fmt::print("[{}] {} ({:.2f} s){}\n", e.stage, e.artifact, e.wall_time_s, e.converged ? "" : " NOT CONVERGED");
    }
    if (result.capacity) {
        const auto b = binding_constraint(*result.capacity);
        fmt::print("binding constraint: {}\n", b ? std::string(pollutant_name(*b)) : std::string("none"));
    }
    if (result.calibration) {
        std::cout << format_calibration_table(*result.calibration);
    }
    if (result.exit_code != ExitCode::ok) {
        fmt::print(stderr, "error in stage '{}': {}\n", result.failed_stage, result.message);
    }
    return static_cast<int>(result.exit_code);
}

int run_independence(const Options& o)
{
    const auto cfg = make_config(o);
    const auto report =
        independence_study(level_specs(cfg, o.levels), scenario_solver(cfg), default_sample_line(cfg.mesh.road));
    const std::filesystem::path out(o.out_dir);
    std::filesystem::create_directories(out);
    write_independence_csv(report, out / "independence_samples.csv");
    write_independence_json(report, out / "independence.json");
    for (const auto& lv : report.levels) {
        fmt::print("{}: {} cells{}\n", lv.name, lv.cells, lv.ok ? "" : " FAILED: " + lv.error);
    }
    for (const auto& p : report.pairs) {
        if (!p.evaluated) {
            fmt::print("{} vs {}: not evaluated\n", report.levels[p.coarse].name, report.levels[p.fine].name);
            continue;
        }
        fmt::print("{} vs {}: max |U| deviation {:.2f}%, max CO deviation {:.2f}% -> {}\n",
                   report.levels[p.coarse].name, report.levels[p.fine].name, 100.0 * p.speed_deviation,
                   100.0 * p.concentration_deviation, p.pass ? "pass" : "fail");
    }
    fmt::print("grid independence (< {:.0f}%): {}\n", 100.0 * report.threshold, report.pass ? "pass" : "fail");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Highway traffic capacity under ambient air-quality constraints"};
    app.require_subcommand(1);
    Options opts;
    const std::vector<std::pair<Stage, std::string>> commands{
        {Stage::emit, "Build the emission inventory"},
        {Stage::mesh, "Build the mesh and write its summary"},
        {Stage::solve, "Solve the wind and turbulence field"},
        {Stage::disperse, "Solve pollutant transport and sample monitors"},
        {Stage::capacity, "Invert monitor ceilings into traffic capacity"},
        {Stage::calibrate, "Compare simulated monitors with field data"},
    };
    std::vector<std::pair<CLI::App*, Stage>> subs;
    for (const auto& [stage, help] : commands) {
        auto* sub = app.add_subcommand(stage_name(stage), help);
        add_common(sub, opts);
        if (stage == Stage::calibrate) {
            sub->add_option("--simulated", opts.simulated, "Published simulated values (pollutant,distance_m,sim_value,unit)")
                ->check(CLI::ExistingFile);
            sub->add_option("--field", opts.field, "Field measurements (pollutant,distance_m,field_value,unit)")
                ->check(CLI::ExistingFile);
        }
        subs.emplace_back(sub, stage);
    }
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
    add_common(pipeline, opts);
    subs.emplace_back(pipeline, Stage::calibrate);
    auto* study = app.add_subcommand("independence", "Compare velocity and CO along the sample line across mesh levels");
    add_common(study, opts);
    study->add_option("--levels", opts.levels, "Mesh presets, coarsest first")
        ->check(CLI::IsMember({"coarse", "medium", "paper"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }
    try {
        if (study->parsed()) {
            return run_independence(opts);
        }
        for (const auto& [sub, stage] : subs) {
            if (sub->parsed()) {
                return run(opts, stage);
            }
        }
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return static_cast<int>(ExitCode::validation);
    }
    return 0;
}
