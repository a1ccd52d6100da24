#pragma once

// Eulerian pollutant transport through a converged flow field and roadside
// monitor sampling.

#include "roadcap/fleet.hpp"
#include "roadcap/flow.hpp"
#include "roadcap/mesh.hpp"
#include "roadcap/pollutant.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace roadcap {

struct DispersionConfig {
    double turbulent_schmidt{0.7};
    double molecular_schmidt{1.0};
    double particle_density{1000.0}; // kg/m3, particulates only
    bool gravitational_settling{true};
    /// When set, replaces the molecular plus turbulent diffusivity (m2/s).
    std::optional<double> constant_diffusivity;
    double tolerance{1e-5};
    double linear_rel_tol{1e-13};
    int linear_max_iterations{20000};

    void validate() const;
};

struct SpeciesField {
    Pollutant pollutant;
    std::vector<double> concentration; // kg/m3 per cell
    double background{0.0};            // kg/m3
    double source_rate{0.0};           // kg/s
    double settling_velocity{0.0};     // m/s, applied downward
    double residual{0.0};
    int linear_iterations{0};
    bool converged{false};
};

/// Stokes terminal velocity (rho_p - rho) g d^2 / (18 mu), g the magnitude of
/// the gravity vector. Never negative; zero for non-particulates.
[[nodiscard]] double settling_velocity(const Pollutant& p, double particle_density, const FluidProperties& fluid);

/// Particle Reynolds number at the Stokes terminal velocity; above 0.5 the
/// Stokes regime is questionable.
[[nodiscard]] double settling_reynolds(const Pollutant& p, double particle_density, const FluidProperties& fluid);

/// Steady advection-diffusion of one species. Inflow through x-min carries
/// zero concentration; every other side is zero-gradient (outflow where the
/// flow leaves, no flux elsewhere). Particulates settle at w_s and deposit
/// on the ground.
[[nodiscard]] SpeciesField solve_scalar(const FlowState& flow, const StructuredMesh& mesh, const SourceSpec& source,
                                        const Pollutant& pollutant, const FluidProperties& fluid,
                                        const DispersionConfig& cfg);

/// Net mass rate leaving through the domain boundaries (kg/s), including
/// deposition, for a solved field.
[[nodiscard]] double boundary_mass_outflow(const SpeciesField& field, const FlowState& flow, const StructuredMesh& mesh);

struct MonitorPoint {
    double distance_m{600.0}; // downwind of the road edge
    double height_m{2.0};
};

[[nodiscard]] std::vector<MonitorPoint> default_monitors();

/// Monitor location: x = road x_max + distance, y = road centre, z = height.
[[nodiscard]] Point3 monitor_position(const MonitorPoint& m, const RoadStrip& road) noexcept;

struct MonitorSample {
    PollutantId pollutant{PollutantId::CO};
    double distance_m{0.0};
    double height_m{0.0};
    double raw{0.0};        // kg/m3
    double background{0.0}; // kg/m3
    double adjusted{0.0};   // raw + background
    std::optional<std::string> error;
};

[[nodiscard]] std::vector<MonitorSample> sample_monitors(const SpeciesField& field, const StructuredMesh& mesh,
                                                         const std::vector<MonitorPoint>& monitors);

/// adjusted = raw + background[pollutant]; raw is kept.
[[nodiscard]] std::vector<MonitorSample> add_background(std::vector<MonitorSample> samples,
                                                        const PerPollutant<double>& background);

void write_monitor_csv(const std::vector<MonitorSample>& samples, const std::filesystem::path& path);
[[nodiscard]] std::vector<MonitorSample> read_monitor_csv(const std::filesystem::path& path);

void write_species_vtk(const StructuredMesh& mesh, const std::vector<SpeciesField>& fields,
                       const std::filesystem::path& path);

} // namespace roadcap
