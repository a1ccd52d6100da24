#pragma once

// Run configuration: one TOML file with a section per stage. Unknown keys
// are rejected; concentration inputs must carry a unit tag.

#include "roadcap/capacity.hpp"
#include "roadcap/dispersion.hpp"
#include "roadcap/fleet.hpp"
#include "roadcap/flow.hpp"
#include "roadcap/mesh.hpp"
#include "roadcap/particles.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace roadcap {

struct RunFiles {
    std::filesystem::path fleet;
    std::filesystem::path emission_factors;
    std::filesystem::path field_measurements; // optional
};

struct NetworkSpec {
    double modeled_length_m{300.0};
    double network_length_m{118'000.0};
};

struct DpmStage {
    bool enabled{false};
    std::vector<PollutantId> pollutants{PollutantId::PM2_5, PollutantId::PM10};
    DpmConfig config;
};

struct RunConfig {
    std::string scenario{"g30ys"};
    std::filesystem::path base_dir{"."}; // relative paths resolve against it
    RunFiles files;
    TrafficState traffic{2'661'896.0, 90.0, 0.0};
    NetworkSpec network;
    CouplingCoefficients coupling;
    std::string mesh_preset_name{"coarse"};
    MeshSpec mesh{mesh_preset("coarse")};
    FluidProperties fluid;
    TurbulenceConstants turbulence;
    BoundarySet boundaries;
    SolverConfig solver;
    DispersionConfig dispersion;
    PerPollutant<Pollutant> pollutants;
    DpmStage dpm;
    ConstraintSet constraints{default_constraints()};
    double background_fraction{0.7};
    MonitorPoint capacity_monitor{600.0, 2.0};
    std::vector<MonitorPoint> monitors{default_monitors()};
    bool deterministic{true};
    std::uint64_t seed{20240601};
    unsigned threads{0};
    bool write_vtk{true};

    RunConfig();
    /// Applies a named mesh preset, keeping the road strip.
    void set_mesh_preset(const std::string& name);
    void validate() const;
};

/// Parses TOML text. base_dir anchors relative file paths;
/// check_files requires every named file to exist.
[[nodiscard]] RunConfig parse_config(const std::string& toml_text, const std::filesystem::path& base_dir,
                                     bool check_files = true);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Full effective configuration as TOML, every default annotated with its
/// origin. Parsing the dump yields the same configuration.
[[nodiscard]] std::string effective_config_dump(const RunConfig& cfg);

} // namespace roadcap
