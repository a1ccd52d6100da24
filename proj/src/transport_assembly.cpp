#include "transport_assembly.hpp"

#include <algorithm>

namespace roadcap::detail {

namespace {

inline double fixed_value(const SideCondition& bc, std::size_t idx)
{
    return bc.values.empty() ? 0.0 : bc.values[idx];
}

} // namespace

void assemble_convection_diffusion(const StructuredMesh& mesh, const FlowState& flux, double rho_conv,
                                   std::span<const double> gamma, const SideConditions& bcs, StencilMatrix& a)
{
    const auto nx = mesh.nx();
    const auto ny = mesh.ny();
    const auto nz = mesh.nz();
    const auto dx = mesh.dx();
    const auto dy = mesh.dy();
    const auto dz = mesh.dz();
    const auto xc = mesh.xc();
    const auto yc = mesh.yc();
    const auto zc = mesh.zc();
    const auto xf = mesh.xf();
    const auto yf = mesh.yf();
    const auto zf = mesh.zf();
    const auto sx = nx;
    const auto sxy = nx * ny;

    // Boundary face: outward flux m (mass units), diffusion conductance D.
    auto boundary = [&](std::size_t c, Side side, std::size_t i, std::size_t j, std::size_t k, double m, double d) {
        const auto& bc = bcs[static_cast<std::size_t>(side)];
        switch (bc.treatment) {
        case FaceTreatment::fixed_value: {
            const double value = fixed_value(bc, side_face_index(mesh, side, i, j, k));
            a.ap[c] += d + std::max(m, 0.0);
            a.b[c] += (d + std::max(-m, 0.0)) * value;
            break;
        }
        case FaceTreatment::outflow: a.ap[c] += std::max(m, 0.0); break;
        case FaceTreatment::zero_flux: break;
        }
    };

    for (std::size_t k = 0; k < nz; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const auto c = mesh.index(i, j, k);
                const double g = gamma[c];
                const double ax = dy[j] * dz[k];
                const double ay = dx[i] * dz[k];
                const double az = dx[i] * dy[j];

                // west
                {
                    const double m = -rho_conv * flux.fx[flux.fx_index(i, j, k)];
                    if (i > 0) {
                        const double dist = xc[i] - xc[i - 1];
                        const double wn = (xf[i] - xc[i - 1]) / dist; // weight of this cell
                        const double gf = (1.0 - wn) * gamma[c - 1] + wn * g;
                        const double d = gf * ax / dist;
                        a.aw[c] = d + std::max(-m, 0.0);
                        a.ap[c] += d + std::max(m, 0.0);
                    } else {
                        boundary(c, Side::xmin, i, j, k, m, g * ax / (0.5 * dx[i]));
                    }
                }
                // east
                {
                    const double m = rho_conv * flux.fx[flux.fx_index(i + 1, j, k)];
                    if (i + 1 < nx) {
                        const double dist = xc[i + 1] - xc[i];
                        const double wn = (xf[i + 1] - xc[i]) / dist; // weight of the neighbour
                        const double gf = (1.0 - wn) * g + wn * gamma[c + 1];
                        const double d = gf * ax / dist;
                        a.ae[c] = d + std::max(-m, 0.0);
                        a.ap[c] += d + std::max(m, 0.0);
                    } else {
                        boundary(c, Side::xmax, i, j, k, m, g * ax / (0.5 * dx[i]));
                    }
                }
                // south
                {
                    const double m = -rho_conv * flux.fy[flux.fy_index(i, j, k)];
                    if (j > 0) {
                        const double dist = yc[j] - yc[j - 1];
                        const double wn = (yf[j] - yc[j - 1]) / dist;
                        const double gf = (1.0 - wn) * gamma[c - sx] + wn * g;
                        const double d = gf * ay / dist;
                        a.as[c] = d + std::max(-m, 0.0);
                        a.ap[c] += d + std::max(m, 0.0);
                    } else {
                        boundary(c, Side::ymin, i, j, k, m, g * ay / (0.5 * dy[j]));
                    }
                }
                // north
                {
                    const double m = rho_conv * flux.fy[flux.fy_index(i, j + 1, k)];
                    if (j + 1 < ny) {
                        const double dist = yc[j + 1] - yc[j];
                        const double wn = (yf[j + 1] - yc[j]) / dist;
                        const double gf = (1.0 - wn) * g + wn * gamma[c + sx];
                        const double d = gf * ay / dist;
                        a.an[c] = d + std::max(-m, 0.0);
                        a.ap[c] += d + std::max(m, 0.0);
                    } else {
                        boundary(c, Side::ymax, i, j, k, m, g * ay / (0.5 * dy[j]));
                    }
                }
                // bottom
                {
                    const double m = -rho_conv * flux.fz[flux.fz_index(i, j, k)];
                    if (k > 0) {
                        const double dist = zc[k] - zc[k - 1];
                        const double wn = (zf[k] - zc[k - 1]) / dist;
                        const double gf = (1.0 - wn) * gamma[c - sxy] + wn * g;
                        const double d = gf * az / dist;
                        a.ab[c] = d + std::max(-m, 0.0);
                        a.ap[c] += d + std::max(m, 0.0);
                    } else {
                        boundary(c, Side::zmin, i, j, k, m, g * az / (0.5 * dz[k]));
                    }
                }
                // top
                {
                    const double m = rho_conv * flux.fz[flux.fz_index(i, j, k + 1)];
                    if (k + 1 < nz) {
                        const double dist = zc[k + 1] - zc[k];
                        const double wn = (zf[k + 1] - zc[k]) / dist;
                        const double gf = (1.0 - wn) * g + wn * gamma[c + sxy];
                        const double d = gf * az / dist;
                        a.at[c] = d + std::max(-m, 0.0);
                        a.ap[c] += d + std::max(m, 0.0);
                    } else {
                        boundary(c, Side::zmax, i, j, k, m, g * az / (0.5 * dz[k]));
                    }
                }
            }
        }
    }
}

} // namespace roadcap::detail
