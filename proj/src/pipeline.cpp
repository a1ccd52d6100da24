#include "roadcap/pipeline.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <memory>

namespace roadcap {

std::string stage_name(Stage s)
{
    switch (s) {
    case Stage::emit: return "emit";
    case Stage::mesh: return "mesh";
    case Stage::solve: return "solve";
    case Stage::disperse: return "disperse";
    case Stage::capacity: return "capacity";
    case Stage::calibrate: return "calibrate";
    }
    return "emit";
}

Stage parse_stage(const std::string& name)
{
    for (auto s : {Stage::emit, Stage::mesh, Stage::solve, Stage::disperse, Stage::capacity, Stage::calibrate}) {
        if (stage_name(s) == name) {
            return s;
        }
    }
    throw ValidationError("unknown stage '" + name + "'");
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read '" + path.string() + "' for hashing");
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) {
        hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
}

void write_manifest_json(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& path)
{
    auto j = nlohmann::ordered_json::array();
    for (const auto& e : manifest) {
        j.push_back({{"stage", e.stage},
                     {"artifact", e.artifact},
                     {"sha256", e.sha256},
                     {"wall_time_s", e.wall_time_s},
                     {"converged", e.converged}});
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

namespace {

using clock = std::chrono::steady_clock;

class Runner {
public:
    Runner(const RunConfig& cfg, std::filesystem::path out)
        : cfg_(cfg)
        , out_(std::move(out))
    {
    }

    PipelineResult run(Stage last)
    {
        std::error_code ec;
        std::filesystem::create_directories(out_, ec);
        if (ec) {
            result_.exit_code = ExitCode::io;
            result_.failed_stage = "setup";
            result_.message = "cannot create output directory '" + out_.string() + "': " + ec.message();
            return std::move(result_);
        }
        const std::vector<std::pair<Stage, void (Runner::*)()>> stages{
            {Stage::emit, &Runner::emit},         {Stage::mesh, &Runner::mesh},
            {Stage::solve, &Runner::solve},       {Stage::disperse, &Runner::disperse},
            {Stage::capacity, &Runner::capacity}, {Stage::calibrate, &Runner::calibrate},
        };
        try {
            started_ = clock::now();
            write_text("config", "effective_config.toml", effective_config_dump(cfg_));
            for (const auto& [stage, fn] : stages) {
                current_ = stage_name(stage);
                started_ = clock::now();
                (this->*fn)();
                if (stage == last) {
                    break;
                }
            }
        } catch (const Error& e) {
            fail(e.exit_code(), e.what());
        } catch (const std::exception& e) {
            fail(ExitCode::validation, e.what());
        }
        try {
            write_manifest_json(result_.manifest, out_ / "manifest.json");
        } catch (const Error& e) {
            if (result_.exit_code == ExitCode::ok) {
                fail(e.exit_code(), e.what());
            }
        }
        return std::move(result_);
    }

private:
    void fail(ExitCode code, const std::string& message)
    {
        result_.exit_code = code;
        result_.failed_stage = current_;
        result_.message = message;
    }

    double elapsed() const { return std::chrono::duration<double>(clock::now() - started_).count(); }

    void record(const std::string& stage, const std::string& artifact, bool converged = true)
    {
        result_.manifest.push_back({stage, artifact, sha256_file(out_ / artifact), elapsed(), converged});
    }

    void write_text(const std::string& stage, const std::string& name, const std::string& text)
    {
        std::ofstream f(out_ / name);
        if (!f) {
            throw IoError("cannot write '" + (out_ / name).string() + "'");
        }
        f << text;
        f.close();
        record(stage, name);
    }

    void emit()
    {
        fleet_ = read_fleet_csv(cfg_.files.fleet);
        const auto ef = read_ef_csv(cfg_.files.emission_factors);
        result_.inventory = compute_inventory(fleet_, ef, cfg_.traffic, cfg_.coupling.transfer);
        source_ = inventory_to_source(*result_.inventory, cfg_.network.modeled_length_m, cfg_.network.network_length_m,
                                      cfg_.mesh.road);
        write_inventory_csv(*result_.inventory, out_ / "inventory.csv");
        record("emit", "inventory.csv");
    }

    void mesh()
    {
        mesh_ = std::make_unique<StructuredMesh>(build_mesh(cfg_.mesh));
        write_mesh_summary_json(*mesh_, cfg_.mesh, out_ / "mesh_summary.json");
        record("mesh", "mesh_summary.json");
    }

    void solve()
    {
        flow_ = solve_flow(*mesh_, cfg_.fluid, cfg_.boundaries, cfg_.turbulence, cfg_.solver);
        write_residual_csv(flow_, out_ / "residuals.csv");
        record("solve", "residuals.csv", flow_.converged);
        if (cfg_.write_vtk) {
            write_flow_vtk(*mesh_, flow_, out_ / "flow.vtk");
            record("solve", "flow.vtk", flow_.converged);
        }
        if (!flow_.converged) {
            const auto& r = flow_.residuals.back();
            throw ConvergenceError(fmt::format("flow did not converge in {} iterations (max scaled residual {:.3e})",
                                               flow_.iterations, r.max()));
        }
    }

    void disperse()
    {
        background_ = background_policy(cfg_.constraints, cfg_.background_fraction);
        std::vector<SpeciesField> fields;
        bool converged = true;
        for (auto id : all_pollutants) {
            auto f = solve_scalar(flow_, *mesh_, source_, cfg_.pollutants[id], cfg_.fluid, cfg_.dispersion);
            f.background = background_[id];
            converged = converged && f.converged;
            auto samples = sample_monitors(f, *mesh_, cfg_.monitors);
            auto cap = sample_monitors(f, *mesh_, {cfg_.capacity_monitor});
            samples = add_background(std::move(samples), background_);
            result_.monitors.insert(result_.monitors.end(), samples.begin(), samples.end());
            capacity_samples_.insert(capacity_samples_.end(), cap.begin(), cap.end());
            fields.push_back(std::move(f));
        }
        write_monitor_csv(result_.monitors, out_ / "monitors.csv");
        record("disperse", "monitors.csv", converged);
        if (cfg_.write_vtk) {
            write_species_vtk(*mesh_, fields, out_ / "species.vtk");
            record("disperse", "species.vtk", converged);
        }
        if (cfg_.dpm.enabled) {
            std::vector<MonitorSample> dpm_samples;
            std::vector<TrajectoryPoint> paths;
            for (auto id : cfg_.dpm.pollutants) {
                auto r = track_particles(flow_, *mesh_, source_, cfg_.pollutants[id], cfg_.fluid, cfg_.turbulence,
                                         cfg_.dpm.config);
                r.estimate.background = background_[id];
                auto s = add_background(sample_monitors(r.estimate, *mesh_, cfg_.monitors), background_);
                dpm_samples.insert(dpm_samples.end(), s.begin(), s.end());
                paths.insert(paths.end(), r.trajectories.begin(), r.trajectories.end());
            }
            write_monitor_csv(dpm_samples, out_ / "dpm_monitors.csv");
            record("disperse", "dpm_monitors.csv");
            if (!paths.empty()) {
                write_trajectory_csv(paths, out_ / "trajectories.csv");
                record("disperse", "trajectories.csv");
            }
        }
        if (!converged) {
            throw ConvergenceError("species transport did not reach the residual tolerance");
        }
    }

    void capacity()
    {
        result_.capacity = capacity_from_samples(capacity_samples_, cfg_.traffic, cfg_.capacity_monitor,
                                                 cfg_.constraints, background_, fleet_);
        write_capacity_csv(*result_.capacity, out_ / "capacity.csv");
        record("capacity", "capacity.csv");
        write_capacity_json(*result_.capacity, out_ / "capacity.json");
        record("capacity", "capacity.json");
    }

    void calibrate()
    {
        if (cfg_.files.field_measurements.empty()) {
            return;
        }
        const auto field = read_field_csv(cfg_.files.field_measurements);
        result_.calibration = roadcap::calibrate(result_.monitors, field);
        write_calibration_csv(*result_.calibration, out_ / "calibration.csv");
        record("calibrate", "calibration.csv");
        write_text("calibrate", "calibration.txt", format_calibration_table(*result_.calibration));
    }

    const RunConfig& cfg_;
    std::filesystem::path out_;
    PipelineResult result_;
    std::string current_{"setup"};
    clock::time_point started_{clock::now()};
    FleetSpec fleet_;
    SourceSpec source_;
    std::unique_ptr<StructuredMesh> mesh_;
    FlowState flow_;
    PerPollutant<double> background_;
    std::vector<MonitorSample> capacity_samples_;
};

} // namespace

PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir, Stage last)
{
    Runner runner(cfg, out_dir);
    return runner.run(last);
}

} // namespace roadcap
