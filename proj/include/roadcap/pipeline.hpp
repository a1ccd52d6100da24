#pragma once

// Stage orchestration: emissions -> mesh -> flow -> dispersion -> capacity
// -> calibration, with a manifest of every artifact written.

#include "roadcap/calibration.hpp"
#include "roadcap/capacity.hpp"
#include "roadcap/config.hpp"
#include "roadcap/errors.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace roadcap {

enum class Stage { emit, mesh, solve, disperse, capacity, calibrate };

[[nodiscard]] std::string stage_name(Stage s);
[[nodiscard]] Stage parse_stage(const std::string& name);

struct ManifestEntry {
    std::string stage;
    std::string artifact; // path relative to the output directory
    std::string sha256;
    double wall_time_s{0.0};
    bool converged{true};
};

struct PipelineResult {
    std::vector<ManifestEntry> manifest;
    ExitCode exit_code{ExitCode::ok};
    std::string failed_stage; // empty on success
    std::string message;
    std::optional<EmissionInventory> inventory;
    std::optional<CapacityReport> capacity;
    std::optional<CalibrationReport> calibration;
    std::vector<MonitorSample> monitors;
};

/// Runs every stage up to and including `last`. A failing stage stops the
/// run; artifacts of earlier stages stay on disk and in the manifest.
/// Flow non-convergence counts as a failure (exit code 3).
[[nodiscard]] PipelineResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                          Stage last = Stage::calibrate);

[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

void write_manifest_json(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& path);

} // namespace roadcap
