#pragma once

// Lagrangian discrete-phase tracking through a frozen flow field with
// spherical drag, gravity/buoyancy and a discrete random walk for turbulent
// dispersion. The residence-time method turns trajectories into a
// concentration estimate comparable to the Eulerian field.

#include "roadcap/dispersion.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace roadcap {

struct DpmConfig {
    int max_steps{50'000};
    double step_factor{5.0};       // integration steps per cell traversal
    int source_update_interval{10}; // kept for config fidelity; one-way coupling never reads it
    std::size_t particles{100'000};
    double particle_density{1000.0}; // kg/m3
    bool random_walk{true};
    double time_scale_constant{0.15}; // C_L in T_L = C_L k / eps
    bool gravity{true};
    bool trap_on_ground{false};   // default reflects at the ground
    bool reflect_sides{true};     // lateral and top planes act as mirrors
    std::uint64_t seed{20240601};
    std::size_t record_trajectories{0}; // first N particles are recorded
    unsigned threads{0};                // 0 = ROADCAP_THREADS or hardware default

    void validate() const;
};

struct TrajectoryPoint {
    std::size_t particle_id{0};
    int step{0};
    double x{0.0}, y{0.0}, z{0.0};
    double t{0.0};
};

struct DpmResult {
    SpeciesField estimate; // residence-time concentration, kg/m3
    std::vector<TrajectoryPoint> trajectories;
    std::size_t escaped{0};
    std::size_t deposited{0};
    std::size_t stuck{0}; // step budget exhausted or stationary inside the domain
    std::uint64_t total_steps{0};
};

/// Worker count: ROADCAP_THREADS when set and positive, else the hardware default.
[[nodiscard]] unsigned worker_threads(unsigned requested = 0);

/// Tracks cfg.particles particles injected uniformly over the road strip at
/// the emission height. Results depend only on (cfg, inputs), not on the
/// worker count: per-particle generators are seeded by (seed, id) and
/// residence times are summed in integer nanoseconds.
[[nodiscard]] DpmResult track_particles(const FlowState& flow, const StructuredMesh& mesh, const SourceSpec& source,
                                        const Pollutant& pollutant, const FluidProperties& fluid,
                                        const TurbulenceConstants& tc, const DpmConfig& cfg);

void write_trajectory_csv(const std::vector<TrajectoryPoint>& points, const std::filesystem::path& path);

} // namespace roadcap
