#pragma once

// Steady incompressible RANS on a collocated structured grid: SIMPLE
// pressure-velocity coupling with Rhie-Chow face fluxes, first-order upwind
// convection and the standard k-epsilon closure with rough-wall log-law wall
// functions at the ground.

#include "roadcap/mesh.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace roadcap {

struct FluidProperties {
    double density{1.2};         // kg/m3
    double viscosity{1.8e-5};    // Pa s
    Point3 gravity{0.0, 0.0, -9.8}; // m/s2; used by particles only
    double temperature_c{32.0};  // diagnostic

    void validate() const;
};

struct TurbulenceConstants {
    double c_mu{0.09};
    double c1_eps{1.44};
    double c2_eps{1.92};
    double sigma_k{1.0};
    double sigma_eps{1.3};
    double kappa{0.41};

    void validate() const;
};

enum class BoundaryKind {
    velocity_inlet,
    pressure_outlet,
    symmetry,
    wall,
};

enum class InletProfile {
    log_law,
    uniform,
};

/// Inlet specification. For the log law, u* follows from U_ref at z_ref:
/// u* = kappa U_ref / ln((z_ref + z0) / z0).
struct InletSpec {
    InletProfile profile{InletProfile::log_law};
    double reference_speed{3.4}; // m/s
    double reference_height{10.0}; // m
    double roughness_length{0.1};  // z0, m
    double friction_velocity{0.0}; // derived for the log law
    // Uniform profile only.
    double uniform_k{0.0};
    double uniform_epsilon{0.0};
};

[[nodiscard]] InletSpec make_log_law_inlet(double reference_speed, double reference_height, double roughness_length,
                                           double kappa = 0.41);
[[nodiscard]] InletSpec make_uniform_inlet(double speed, double k = 0.0, double epsilon = 0.0);

struct BoundarySet {
    InletSpec inlet{make_log_law_inlet(3.4, 10.0, 0.1)};
    BoundaryKind outlet{BoundaryKind::pressure_outlet}; // x max
    BoundaryKind lateral{BoundaryKind::symmetry};       // y min and y max
    BoundaryKind top{BoundaryKind::symmetry};           // z max
    BoundaryKind ground{BoundaryKind::wall};            // z min

    void validate(const TurbulenceConstants& tc) const;
};

struct InletValues {
    double u;
    double k;
    double epsilon;
};

/// U = (u*/kappa) ln((z + z0)/z0), k = u*^2 / sqrt(C_mu), eps = u*^3 / (kappa (z + z0)).
[[nodiscard]] InletValues inlet_profile(double z, const BoundarySet& bc, const TurbulenceConstants& tc);

enum class TurbulenceModel {
    standard_k_epsilon,
    laminar,
};

struct SolverConfig {
    double relax_velocity{0.7};
    double relax_pressure{0.3};
    double relax_k{0.8};
    double relax_epsilon{0.8};
    double tolerance{1e-5};
    int max_iterations{3000};
    TurbulenceModel turbulence{TurbulenceModel::standard_k_epsilon};
    bool deterministic_reductions{true};
    double k_floor{1e-10};
    double epsilon_floor{1e-10};
    // Inner linear solves per outer iteration.
    double momentum_rel_tol{0.1};
    double pressure_rel_tol{0.05};
    int inner_max_iterations{200};

    void validate() const;
};

/// Scaled residuals of one outer iteration. Continuity is the summed absolute
/// cell mass imbalance over the inlet inflow; the others are
/// sum |r| / sum |a_P phi_scale| with phi_scale the speed (momentum) or the
/// variable itself (k, epsilon).
struct ResidualRecord {
    int iteration{0};
    double continuity{0.0};
    double u{0.0};
    double v{0.0};
    double w{0.0};
    double k{0.0};
    double epsilon{0.0};

    [[nodiscard]] double max() const noexcept;
};

struct FlowState {
    std::size_t nx{0}, ny{0}, nz{0};
    std::vector<double> u, v, w, p, k, epsilon, mu_t;
    /// Outward-from-lower-cell volumetric face fluxes (m3/s):
    /// fx has (nx+1) ny nz entries, fy nx (ny+1) nz, fz nx ny (nz+1).
    std::vector<double> fx, fy, fz;
    std::vector<ResidualRecord> residuals;
    bool converged{false};
    int iterations{0};
    std::size_t k_clamps{0};
    std::size_t epsilon_clamps{0};

    [[nodiscard]] std::size_t fx_index(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + (nx + 1) * (j + ny * k);
    }
    [[nodiscard]] std::size_t fy_index(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + nx * (j + (ny + 1) * k);
    }
    [[nodiscard]] std::size_t fz_index(std::size_t i, std::size_t j, std::size_t k) const noexcept
    {
        return i + nx * (j + ny * k);
    }

    [[nodiscard]] std::vector<double> speed() const;
};

/// Uniform state on a mesh: velocity (ux, uy, uz), k and eps, mu_t from the
/// constants, face fluxes from linear interpolation. Used to set up
/// prescribed-flow transport problems.
[[nodiscard]] FlowState uniform_flow(const StructuredMesh& mesh, Point3 velocity, double k, double epsilon,
                                     const FluidProperties& fluid, const TurbulenceConstants& tc);

/// mu_t = rho C_mu k^2 / eps, cell by cell.
void eddy_viscosity(FlowState& state, const FluidProperties& fluid, const TurbulenceConstants& tc);

/// Runs SIMPLE outer iterations until every scaled residual is below
/// cfg.tolerance. Hitting max_iterations returns the partial state with
/// converged == false; NaN/Inf throws DivergenceError.
[[nodiscard]] FlowState solve_flow(const StructuredMesh& mesh, const FluidProperties& fluid, const BoundarySet& bc,
                                   const TurbulenceConstants& tc, const SolverConfig& cfg);

/// Net volumetric outflow of every cell (m3/s); zero for a conservative field.
[[nodiscard]] std::vector<double> cell_mass_imbalance(const FlowState& state);

struct FlowBalance {
    double inflow{0.0};  // m3/s through inflow faces
    double outflow{0.0}; // m3/s through outflow faces
};

[[nodiscard]] FlowBalance boundary_balance(const FlowState& state);

void write_flow_vtk(const StructuredMesh& mesh, const FlowState& state, const std::filesystem::path& path);
void write_residual_csv(const FlowState& state, const std::filesystem::path& path);

} // namespace roadcap
