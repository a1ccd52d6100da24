#pragma once

// Convection-diffusion assembly shared by the momentum, turbulence and
// species equations: first-order upwind convection, central diffusion,
// per-side boundary treatments.

#include "roadcap/flow.hpp"
#include "roadcap/linear_solver.hpp"
#include "roadcap/mesh.hpp"

#include <array>
#include <span>
#include <vector>

namespace roadcap::detail {

enum class Side : std::size_t { xmin = 0, xmax, ymin, ymax, zmin, zmax };

inline constexpr std::array<Side, 6> all_sides{Side::xmin, Side::xmax, Side::ymin, Side::ymax, Side::zmin, Side::zmax};

enum class FaceTreatment {
    fixed_value, // Dirichlet: diffusion to the face plus upwinded inflow
    zero_flux,   // no convective or diffusive transport
    outflow,     // zero gradient: upwinded outflow only
};

struct SideCondition {
    FaceTreatment treatment{FaceTreatment::zero_flux};
    /// Face values for fixed_value sides, indexed by side_face_index; empty means 0.
    std::vector<double> values;
};

using SideConditions = std::array<SideCondition, 6>;

[[nodiscard]] inline std::size_t side_face_index(const StructuredMesh& m, Side side, std::size_t i, std::size_t j,
                                                 std::size_t k) noexcept
{
    switch (side) {
    case Side::xmin:
    case Side::xmax: return j + m.ny() * k;
    case Side::ymin:
    case Side::ymax: return i + m.nx() * k;
    case Side::zmin:
    case Side::zmax: return i + m.nx() * j;
    }
    return 0;
}

[[nodiscard]] inline std::size_t side_face_count(const StructuredMesh& m, Side side) noexcept
{
    switch (side) {
    case Side::xmin:
    case Side::xmax: return m.ny() * m.nz();
    case Side::ymin:
    case Side::ymax: return m.nx() * m.nz();
    case Side::zmin:
    case Side::zmax: return m.nx() * m.ny();
    }
    return 0;
}

/// Fills a (zeroed) matrix with the convection-diffusion operator.
/// rho_conv multiplies the volumetric face fluxes; gamma is the cell-wise
/// diffusion coefficient (linearly interpolated to faces).
void assemble_convection_diffusion(const StructuredMesh& mesh, const FlowState& flux, double rho_conv,
                                   std::span<const double> gamma, const SideConditions& bcs, StencilMatrix& a);

} // namespace roadcap::detail
