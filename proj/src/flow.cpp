#include "roadcap/flow.hpp"

#include "roadcap/errors.hpp"
#include "roadcap/linear_solver.hpp"
#include "roadcap/vtk.hpp"
#include "transport_assembly.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace roadcap {

using detail::FaceTreatment;
using detail::Side;
using detail::SideConditions;

void FluidProperties::validate() const
{
    if (!(density > 0.0) || !(viscosity > 0.0)) {
        throw ValidationError("fluid density and viscosity must be > 0");
    }
}

void TurbulenceConstants::validate() const
{
    for (double c : {c_mu, c1_eps, c2_eps, sigma_k, sigma_eps, kappa}) {
        if (!(c > 0.0)) {
            throw ValidationError("turbulence constants must be > 0");
        }
    }
}

InletSpec make_log_law_inlet(double reference_speed, double reference_height, double roughness_length, double kappa)
{
    if (!(roughness_length > 0.0)) {
        throw ValidationError("roughness length z0 must be > 0");
    }
    if (!(reference_height > 0.0) || !(reference_speed >= 0.0)) {
        throw ValidationError("inlet reference height must be > 0 and reference speed >= 0");
    }
    InletSpec s;
    s.profile = InletProfile::log_law;
    s.reference_speed = reference_speed;
    s.reference_height = reference_height;
    s.roughness_length = roughness_length;
    s.friction_velocity = kappa * reference_speed / std::log((reference_height + roughness_length) / roughness_length);
    return s;
}

InletSpec make_uniform_inlet(double speed, double k, double epsilon)
{
    InletSpec s;
    s.profile = InletProfile::uniform;
    s.reference_speed = speed;
    s.uniform_k = k;
    s.uniform_epsilon = epsilon;
    return s;
}

void BoundarySet::validate(const TurbulenceConstants& tc) const
{
    if (!(inlet.roughness_length > 0.0)) {
        throw ValidationError("roughness length z0 must be > 0");
    }
    if (inlet.profile == InletProfile::log_law) {
        const double expected =
            tc.kappa * inlet.reference_speed / std::log((inlet.reference_height + inlet.roughness_length) / inlet.roughness_length);
        if (std::abs(expected - inlet.friction_velocity) > 1e-9 * std::max(1.0, expected)) {
            throw ValidationError(fmt::format("friction velocity {} is inconsistent with U_ref {} at z_ref {} (expected {})",
                                              inlet.friction_velocity, inlet.reference_speed, inlet.reference_height, expected));
        }
    }
    for (auto kind : {outlet, lateral, top, ground}) {
        if (kind == BoundaryKind::velocity_inlet) {
            throw ValidationError("velocity inlets are only supported on the x-min side");
        }
    }
}

InletValues inlet_profile(double z, const BoundarySet& bc, const TurbulenceConstants& tc)
{
    if (z < 0.0) {
        throw ValidationError("inlet profile height must be >= 0");
    }
    const auto& in = bc.inlet;
    if (in.profile == InletProfile::uniform) {
        return {in.reference_speed, in.uniform_k, in.uniform_epsilon};
    }
    const double us = in.friction_velocity;
    const double z0 = in.roughness_length;
    return {us / tc.kappa * std::log((z + z0) / z0), us * us / std::sqrt(tc.c_mu), us * us * us / (tc.kappa * (z + z0))};
}

void SolverConfig::validate() const
{
    for (double r : {relax_velocity, relax_pressure, relax_k, relax_epsilon}) {
        if (!(r > 0.0 && r <= 1.0)) {
            throw ValidationError("relaxation factors must lie in (0, 1]");
        }
    }
    if (!(tolerance > 0.0) || max_iterations < 1) {
        throw ValidationError("solver tolerance must be > 0 and max_iterations >= 1");
    }
    if (!(k_floor > 0.0) || !(epsilon_floor > 0.0)) {
        throw ValidationError("k and epsilon floors must be > 0");
    }
}

double ResidualRecord::max() const noexcept
{
    return std::max({continuity, u, v, w, k, epsilon});
}

std::vector<double> FlowState::speed() const
{
    std::vector<double> s(u.size());
    for (std::size_t c = 0; c < s.size(); ++c) {
        s[c] = std::sqrt(u[c] * u[c] + v[c] * v[c] + w[c] * w[c]);
    }
    return s;
}

void eddy_viscosity(FlowState& state, const FluidProperties& fluid, const TurbulenceConstants& tc)
{
    state.mu_t.resize(state.k.size());
    for (std::size_t c = 0; c < state.k.size(); ++c) {
        state.mu_t[c] = fluid.density * tc.c_mu * state.k[c] * state.k[c] / state.epsilon[c];
    }
}

namespace {

void allocate(FlowState& s, const StructuredMesh& m)
{
    s.nx = m.nx();
    s.ny = m.ny();
    s.nz = m.nz();
    const auto n = m.cell_count();
    for (auto* f : {&s.u, &s.v, &s.w, &s.p, &s.k, &s.epsilon, &s.mu_t}) {
        f->assign(n, 0.0);
    }
    s.fx.assign((s.nx + 1) * s.ny * s.nz, 0.0);
    s.fy.assign(s.nx * (s.ny + 1) * s.nz, 0.0);
    s.fz.assign(s.nx * s.ny * (s.nz + 1), 0.0);
}

// Side classification of the box faces.
struct SideKinds {
    std::array<BoundaryKind, 6> kind;

    explicit SideKinds(const BoundarySet& bc)
        : kind{BoundaryKind::velocity_inlet, bc.outlet, bc.lateral, bc.lateral, bc.ground, bc.top}
    {
    }
    [[nodiscard]] BoundaryKind operator[](Side s) const noexcept { return kind[static_cast<std::size_t>(s)]; }
    [[nodiscard]] bool has_outlet() const noexcept
    {
        return std::any_of(kind.begin(), kind.end(), [](auto k) { return k == BoundaryKind::pressure_outlet; });
    }
};

// Component 0/1/2 is normal to sides x/y/z respectively.
constexpr std::size_t normal_component(Side s) noexcept
{
    return static_cast<std::size_t>(s) / 2;
}

// Linear interpolation weight of the upper cell at the face between lo and lo+1.
inline double upper_weight(std::span<const double> faces, std::span<const double> centres, std::size_t lo)
{
    return (faces[lo + 1] - centres[lo]) / (centres[lo + 1] - centres[lo]);
}

struct WallCell {
    std::size_t cell;
    Side side;
    double distance; // centre to wall
};

class SimpleSolver {
public:
    SimpleSolver(const StructuredMesh& mesh, const FluidProperties& fluid, const BoundarySet& bc,
                 const TurbulenceConstants& tc, const SolverConfig& cfg)
        : m_(mesh)
        , fluid_(fluid)
        , bc_(bc)
        , tc_(tc)
        , cfg_(cfg)
        , sides_(bc)
        , turbulent_(cfg.turbulence == TurbulenceModel::standard_k_epsilon)
        , n_(mesh.cell_count())
        , a_(mesh.nx(), mesh.ny(), mesh.nz())
    {
        allocate(s_, mesh);
        for (auto& d : d_) {
            d.assign(n_, 0.0);
        }
        for (auto& g : gp_) {
            g.assign(n_, 0.0);
        }
        mu_eff_.assign(n_, 0.0);
        pc_.assign(n_, 0.0);
        production_.assign(n_, 0.0);
        wall_of_.assign(n_, -1);
        build_inlet();
        build_wall_cells();
        initialise();
    }

    FlowState run()
    {
        for (int it = 1; it <= cfg_.max_iterations; ++it) {
            ResidualRecord rec;
            rec.iteration = it;
            update_effective_viscosity();
            pressure_gradient(s_.p, gp_, true);
            rec.u = solve_momentum(0, it);
            rec.v = solve_momentum(1, it);
            rec.w = solve_momentum(2, it);
            rhie_chow_fluxes();
            rec.continuity = continuity_residual();
            correct_pressure(it);
            if (turbulent_) {
                compute_production();
                rec.k = solve_k(it);
                rec.epsilon = solve_epsilon(it);
                eddy_viscosity(s_, fluid_, tc_);
            }
            s_.residuals.push_back(rec);
            s_.iterations = it;
            if (rec.max() < cfg_.tolerance) {
                s_.converged = true;
                break;
            }
        }
        return std::move(s_);
    }

private:
    void build_inlet()
    {
        const auto ny = m_.ny();
        const auto nz = m_.nz();
        inlet_u_.assign(ny * nz, 0.0);
        inlet_k_.assign(ny * nz, 0.0);
        inlet_eps_.assign(ny * nz, 0.0);
        for (std::size_t k = 0; k < nz; ++k) {
            const auto in = inlet_profile(m_.zc()[k], bc_, tc_);
            for (std::size_t j = 0; j < ny; ++j) {
                inlet_u_[j + ny * k] = in.u;
                inlet_k_[j + ny * k] = std::max(in.k, cfg_.k_floor);
                inlet_eps_[j + ny * k] = std::max(in.epsilon, cfg_.epsilon_floor);
            }
        }
    }

    void build_wall_cells()
    {
        auto add = [&](std::size_t c, Side side, double dist) {
            if (wall_of_[c] >= 0 && walls_[static_cast<std::size_t>(wall_of_[c])].distance <= dist) {
                return;
            }
            if (wall_of_[c] >= 0) {
                walls_[static_cast<std::size_t>(wall_of_[c])] = {c, side, dist};
            } else {
                wall_of_[c] = static_cast<long>(walls_.size());
                walls_.push_back({c, side, dist});
            }
        };
        const auto nx = m_.nx(), ny = m_.ny(), nz = m_.nz();
        for (std::size_t k = 0; k < nz; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const auto c = m_.index(i, j, k);
                    if (k == 0 && sides_[Side::zmin] == BoundaryKind::wall) add(c, Side::zmin, 0.5 * m_.dz()[k]);
                    if (k + 1 == nz && sides_[Side::zmax] == BoundaryKind::wall) add(c, Side::zmax, 0.5 * m_.dz()[k]);
                    if (j == 0 && sides_[Side::ymin] == BoundaryKind::wall) add(c, Side::ymin, 0.5 * m_.dy()[j]);
                    if (j + 1 == ny && sides_[Side::ymax] == BoundaryKind::wall) add(c, Side::ymax, 0.5 * m_.dy()[j]);
                }
            }
        }
    }

    void initialise()
    {
        const auto ny = m_.ny();
        for (std::size_t c = 0; c < n_; ++c) {
            const auto [i, j, k] = m_.ijk(c);
            s_.u[c] = inlet_u_[j + ny * k];
            s_.k[c] = turbulent_ ? inlet_k_[j + ny * k] : 0.0;
            s_.epsilon[c] = turbulent_ ? inlet_eps_[j + ny * k] : 0.0;
        }
        if (turbulent_) {
            eddy_viscosity(s_, fluid_, tc_);
        }
        // Initial fluxes by linear interpolation; boundaries per their kind.
        for (auto& d : d_) {
            std::fill(d.begin(), d.end(), 0.0);
        }
        rhie_chow_fluxes();
    }

    void update_effective_viscosity()
    {
        for (std::size_t c = 0; c < n_; ++c) {
            mu_eff_[c] = fluid_.viscosity + (turbulent_ ? s_.mu_t[c] : 0.0);
        }
    }

    // Value of cell field phi on a boundary face for gradient purposes.
    // component: 0..2 for velocity components, 3 for a scalar with
    // zero-gradient everywhere except outlets (pressure) when outlet_zero.
    template <typename FaceValue>
    void gauss_gradient(std::span<const double> phi, std::array<std::vector<double>, 3>& grad, FaceValue boundary_value)
    {
        const auto nx = m_.nx(), ny = m_.ny(), nz = m_.nz();
        const auto xf = m_.xf(), yf = m_.yf(), zf = m_.zf();
        const auto xc = m_.xc(), yc = m_.yc(), zc = m_.zc();
        const auto sx = nx, sxy = nx * ny;
        for (std::size_t k = 0; k < nz; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const auto c = m_.index(i, j, k);
                    double lo, hi;
                    lo = i > 0 ? phi[c - 1] + upper_weight(xf, xc, i - 1) * (phi[c] - phi[c - 1])
                               : boundary_value(Side::xmin, c, i, j, k);
                    hi = i + 1 < nx ? phi[c] + upper_weight(xf, xc, i) * (phi[c + 1] - phi[c])
                                    : boundary_value(Side::xmax, c, i, j, k);
                    grad[0][c] = (hi - lo) / m_.dx()[i];
                    lo = j > 0 ? phi[c - sx] + upper_weight(yf, yc, j - 1) * (phi[c] - phi[c - sx])
                               : boundary_value(Side::ymin, c, i, j, k);
                    hi = j + 1 < ny ? phi[c] + upper_weight(yf, yc, j) * (phi[c + sx] - phi[c])
                                    : boundary_value(Side::ymax, c, i, j, k);
                    grad[1][c] = (hi - lo) / m_.dy()[j];
                    lo = k > 0 ? phi[c - sxy] + upper_weight(zf, zc, k - 1) * (phi[c] - phi[c - sxy])
                               : boundary_value(Side::zmin, c, i, j, k);
                    hi = k + 1 < nz ? phi[c] + upper_weight(zf, zc, k) * (phi[c + sxy] - phi[c])
                                    : boundary_value(Side::zmax, c, i, j, k);
                    grad[2][c] = (hi - lo) / m_.dz()[k];
                }
            }
        }
    }

    // Pressure (or correction) gradient: fixed zero on outlets, zero gradient elsewhere.
    void pressure_gradient(std::span<const double> p, std::array<std::vector<double>, 3>& grad, bool)
    {
        gauss_gradient(p, grad, [&](Side side, std::size_t c, std::size_t, std::size_t, std::size_t) {
            return sides_[side] == BoundaryKind::pressure_outlet ? 0.0 : p[c];
        });
    }

    double velocity_boundary_value(std::size_t comp, Side side, std::size_t c, std::size_t j, std::size_t k) const
    {
        const auto& field = comp == 0 ? s_.u : comp == 1 ? s_.v : s_.w;
        switch (sides_[side]) {
        case BoundaryKind::velocity_inlet: return comp == 0 ? inlet_u_[j + m_.ny() * k] : 0.0;
        case BoundaryKind::pressure_outlet: return field[c];
        case BoundaryKind::symmetry: return normal_component(side) == comp ? 0.0 : field[c];
        case BoundaryKind::wall: return 0.0;
        }
        return 0.0;
    }

    SideConditions momentum_conditions(std::size_t comp) const
    {
        SideConditions bcs;
        for (auto side : detail::all_sides) {
            auto& bc = bcs[static_cast<std::size_t>(side)];
            switch (sides_[side]) {
            case BoundaryKind::velocity_inlet:
                bc.treatment = FaceTreatment::fixed_value;
                if (comp == 0) {
                    bc.values = inlet_u_;
                }
                break;
            case BoundaryKind::pressure_outlet: bc.treatment = FaceTreatment::outflow; break;
            case BoundaryKind::symmetry:
                bc.treatment = normal_component(side) == comp ? FaceTreatment::fixed_value : FaceTreatment::zero_flux;
                break;
            case BoundaryKind::wall:
                // Tangential components of turbulent walls get the wall function instead.
                bc.treatment = (normal_component(side) == comp || !turbulent_) ? FaceTreatment::fixed_value
                                                                                : FaceTreatment::zero_flux;
                break;
            }
        }
        return bcs;
    }

    double wall_area(const WallCell& wc) const
    {
        const auto [i, j, k] = m_.ijk(wc.cell);
        switch (wc.side) {
        case Side::ymin:
        case Side::ymax: return m_.dx()[i] * m_.dz()[k];
        case Side::zmin:
        case Side::zmax: return m_.dx()[i] * m_.dy()[j];
        default: return m_.dy()[j] * m_.dz()[k];
        }
    }

    // Shear coefficient tau_w / U_t of the rough-wall log law.
    double wall_shear_coefficient(const WallCell& wc) const
    {
        const double z0 = bc_.inlet.roughness_length;
        const double ut = std::pow(tc_.c_mu, 0.25) * std::sqrt(s_.k[wc.cell]);
        return fluid_.density * ut * tc_.kappa / std::log((wc.distance + z0) / z0);
    }

    double tangential_speed(const WallCell& wc) const
    {
        const auto c = wc.cell;
        const auto n = normal_component(wc.side);
        double s2 = 0.0;
        if (n != 0) s2 += s_.u[c] * s_.u[c];
        if (n != 1) s2 += s_.v[c] * s_.v[c];
        if (n != 2) s2 += s_.w[c] * s_.w[c];
        return std::sqrt(s2);
    }

    void check_finite(std::span<const double> f, const char* name, int it) const
    {
        for (double x : f) {
            if (!std::isfinite(x)) {
                throw DivergenceError(name, it);
            }
        }
    }

    double solve_momentum(std::size_t comp, int it)
    {
        auto& phi = comp == 0 ? s_.u : comp == 1 ? s_.v : s_.w;
        a_.reset();
        detail::assemble_convection_diffusion(m_, s_, fluid_.density, mu_eff_, momentum_conditions(comp), a_);
        if (turbulent_) {
            for (const auto& wc : walls_) {
                if (normal_component(wc.side) != comp) {
                    a_.ap[wc.cell] += wall_shear_coefficient(wc) * wall_area(wc);
                }
            }
        }
        for (std::size_t c = 0; c < n_; ++c) {
            a_.b[c] -= gp_[comp][c] * m_.volume(c);
        }

        double num = a_.absolute_residual_sum(phi);
        double den = 0.0;
        for (std::size_t c = 0; c < n_; ++c) {
            const double speed = std::sqrt(s_.u[c] * s_.u[c] + s_.v[c] * s_.v[c] + s_.w[c] * s_.w[c]);
            den += a_.ap[c] * speed;
        }

        const double alpha = cfg_.relax_velocity;
        for (std::size_t c = 0; c < n_; ++c) {
            a_.ap[c] /= alpha;
            a_.b[c] += (1.0 - alpha) * a_.ap[c] * phi[c];
            d_[comp][c] = m_.volume(c) / a_.ap[c];
        }
        solve_bicgstab(a_, phi, cfg_.momentum_rel_tol, 0.0, cfg_.inner_max_iterations);
        check_finite(phi, comp == 0 ? "u" : comp == 1 ? "v" : "w", it);
        return scaled(num, den);
    }

    static double scaled(double num, double den)
    {
        if (num == 0.0) {
            return 0.0;
        }
        return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    }

    // Rhie-Chow face fluxes from the current velocities, pressure, pressure
    // gradient and momentum diagonals.
    void rhie_chow_fluxes()
    {
        const auto nx = m_.nx(), ny = m_.ny(), nz = m_.nz();
        const auto xf = m_.xf(), yf = m_.yf(), zf = m_.zf();
        const auto xc = m_.xc(), yc = m_.yc(), zc = m_.zc();
        const auto dx = m_.dx(), dy = m_.dy(), dz = m_.dz();
        const auto sx = nx, sxy = nx * ny;
        const auto& p = s_.p;

        auto outlet_velocity = [&](std::size_t comp, std::size_t c, double half, double outward_sign) {
            const auto& vel = comp == 0 ? s_.u : comp == 1 ? s_.v : s_.w;
            // Face pressure 0, outward normal derivative (0 - p_P)/half.
            const double dpdn = (0.0 - p[c]) / half;
            return vel[c] * outward_sign - d_[comp][c] * (dpdn - outward_sign * gp_[comp][c]);
        };

        for (std::size_t k = 0; k < nz; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t i = 0; i <= nx; ++i) {
                    const auto f = s_.fx_index(i, j, k);
                    const double area = dy[j] * dz[k];
                    if (i == 0) {
                        s_.fx[f] = inlet_u_[j + ny * k] * area;
                    } else if (i == nx) {
                        const auto c = m_.index(nx - 1, j, k);
                        s_.fx[f] = sides_[Side::xmax] == BoundaryKind::pressure_outlet
                                       ? outlet_velocity(0, c, 0.5 * dx[nx - 1], 1.0) * area
                                       : 0.0;
                    } else {
                        const auto cp = m_.index(i - 1, j, k);
                        const auto ce = cp + 1;
                        const double w = upper_weight(xf, xc, i - 1);
                        const double dist = xc[i] - xc[i - 1];
                        const double ub = (1.0 - w) * s_.u[cp] + w * s_.u[ce];
                        const double db = (1.0 - w) * d_[0][cp] + w * d_[0][ce];
                        const double gb = (1.0 - w) * gp_[0][cp] + w * gp_[0][ce];
                        s_.fx[f] = (ub - db * ((p[ce] - p[cp]) / dist - gb)) * area;
                    }
                }
            }
        }
        for (std::size_t k = 0; k < nz; ++k) {
            for (std::size_t j = 0; j <= ny; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const auto f = s_.fy_index(i, j, k);
                    const double area = dx[i] * dz[k];
                    if (j == 0 || j == ny) {
                        const Side side = j == 0 ? Side::ymin : Side::ymax;
                        const auto c = m_.index(i, j == 0 ? 0 : ny - 1, k);
                        const double sign = j == 0 ? -1.0 : 1.0;
                        // Stored flux is in +y; outlet velocity is computed outward.
                        s_.fy[f] = sides_[side] == BoundaryKind::pressure_outlet
                                       ? sign * outlet_velocity(1, c, 0.5 * dy[j == 0 ? 0 : ny - 1], sign) * area
                                       : 0.0;
                    } else {
                        const auto cp = m_.index(i, j - 1, k);
                        const auto cn = cp + sx;
                        const double w = upper_weight(yf, yc, j - 1);
                        const double dist = yc[j] - yc[j - 1];
                        const double vb = (1.0 - w) * s_.v[cp] + w * s_.v[cn];
                        const double db = (1.0 - w) * d_[1][cp] + w * d_[1][cn];
                        const double gb = (1.0 - w) * gp_[1][cp] + w * gp_[1][cn];
                        s_.fy[f] = (vb - db * ((p[cn] - p[cp]) / dist - gb)) * area;
                    }
                }
            }
        }
        for (std::size_t k = 0; k <= nz; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const auto f = s_.fz_index(i, j, k);
                    const double area = dx[i] * dy[j];
                    if (k == 0 || k == nz) {
                        const Side side = k == 0 ? Side::zmin : Side::zmax;
                        const auto c = m_.index(i, j, k == 0 ? 0 : nz - 1);
                        const double sign = k == 0 ? -1.0 : 1.0;
                        s_.fz[f] = sides_[side] == BoundaryKind::pressure_outlet
                                       ? sign * outlet_velocity(2, c, 0.5 * dz[k == 0 ? 0 : nz - 1], sign) * area
                                       : 0.0;
                    } else {
                        const auto cp = m_.index(i, j, k - 1);
                        const auto ct = cp + sxy;
                        const double w = upper_weight(zf, zc, k - 1);
                        const double dist = zc[k] - zc[k - 1];
                        const double wb = (1.0 - w) * s_.w[cp] + w * s_.w[ct];
                        const double db = (1.0 - w) * d_[2][cp] + w * d_[2][ct];
                        const double gb = (1.0 - w) * gp_[2][cp] + w * gp_[2][ct];
                        s_.fz[f] = (wb - db * ((p[ct] - p[cp]) / dist - gb)) * area;
                    }
                }
            }
        }
    }

    double continuity_residual() const
    {
        const auto imbalance = cell_mass_imbalance(s_);
        double sum = 0.0;
        for (double x : imbalance) {
            sum += std::abs(x);
        }
        const auto bal = boundary_balance(s_);
        return scaled(sum, bal.inflow);
    }

    void correct_pressure(int it)
    {
        const auto nx = m_.nx(), ny = m_.ny(), nz = m_.nz();
        const auto xf = m_.xf(), yf = m_.yf(), zf = m_.zf();
        const auto xc = m_.xc(), yc = m_.yc(), zc = m_.zc();
        const auto dx = m_.dx(), dy = m_.dy(), dz = m_.dz();
        const auto sx = nx, sxy = nx * ny;
        a_.reset();
        const auto imbalance = cell_mass_imbalance(s_);

        // Outlet conductance d_P A / half for each outlet boundary face of a cell.
        auto outlet_coeff = [&](Side side, std::size_t c, std::size_t i, std::size_t j, std::size_t k) {
            if (sides_[side] != BoundaryKind::pressure_outlet) {
                return 0.0;
            }
            const auto comp = normal_component(side);
            const double area = comp == 0 ? dy[j] * dz[k] : comp == 1 ? dx[i] * dz[k] : dx[i] * dy[j];
            const double half = 0.5 * (comp == 0 ? dx[i] : comp == 1 ? dy[j] : dz[k]);
            return d_[comp][c] * area / half;
        };

        for (std::size_t k = 0; k < nz; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const auto c = m_.index(i, j, k);
                    if (i > 0) {
                        const double w = upper_weight(xf, xc, i - 1);
                        a_.aw[c] = ((1.0 - w) * d_[0][c - 1] + w * d_[0][c]) * dy[j] * dz[k] / (xc[i] - xc[i - 1]);
                    } else {
                        a_.ap[c] += outlet_coeff(Side::xmin, c, i, j, k);
                    }
                    if (i + 1 < nx) {
                        const double w = upper_weight(xf, xc, i);
                        a_.ae[c] = ((1.0 - w) * d_[0][c] + w * d_[0][c + 1]) * dy[j] * dz[k] / (xc[i + 1] - xc[i]);
                    } else {
                        a_.ap[c] += outlet_coeff(Side::xmax, c, i, j, k);
                    }
                    if (j > 0) {
                        const double w = upper_weight(yf, yc, j - 1);
                        a_.as[c] = ((1.0 - w) * d_[1][c - sx] + w * d_[1][c]) * dx[i] * dz[k] / (yc[j] - yc[j - 1]);
                    } else {
                        a_.ap[c] += outlet_coeff(Side::ymin, c, i, j, k);
                    }
                    if (j + 1 < ny) {
                        const double w = upper_weight(yf, yc, j);
                        a_.an[c] = ((1.0 - w) * d_[1][c] + w * d_[1][c + sx]) * dx[i] * dz[k] / (yc[j + 1] - yc[j]);
                    } else {
                        a_.ap[c] += outlet_coeff(Side::ymax, c, i, j, k);
                    }
                    if (k > 0) {
                        const double w = upper_weight(zf, zc, k - 1);
                        a_.ab[c] = ((1.0 - w) * d_[2][c - sxy] + w * d_[2][c]) * dx[i] * dy[j] / (zc[k] - zc[k - 1]);
                    } else {
                        a_.ap[c] += outlet_coeff(Side::zmin, c, i, j, k);
                    }
                    if (k + 1 < nz) {
                        const double w = upper_weight(zf, zc, k);
                        a_.at[c] = ((1.0 - w) * d_[2][c] + w * d_[2][c + sxy]) * dx[i] * dy[j] / (zc[k + 1] - zc[k]);
                    } else {
                        a_.ap[c] += outlet_coeff(Side::zmax, c, i, j, k);
                    }
                    a_.ap[c] += a_.aw[c] + a_.ae[c] + a_.as[c] + a_.an[c] + a_.ab[c] + a_.at[c];
                    a_.b[c] = -imbalance[c];
                }
            }
        }
        // Conductances are kept separately because pinning edits the matrix.
        const StencilMatrix cond = a_;
        if (!sides_.has_outlet()) {
            // Closed domain: pin the correction in cell 0. Neighbour references
            // to it multiply zero, so dropping them keeps the matrix symmetric.
            a_.ae[0] = a_.an[0] = a_.at[0] = 0.0;
            if (n_ > 1) a_.aw[1] = 0.0;
            if (n_ > sx) a_.as[sx] = 0.0;
            if (n_ > sxy) a_.ab[sxy] = 0.0;
            a_.ap[0] = 1.0;
            a_.b[0] = 0.0;
        }

        std::fill(pc_.begin(), pc_.end(), 0.0);
        solve_pcg(a_, pc_, cfg_.pressure_rel_tol, 1e-300, cfg_.inner_max_iterations);
        check_finite(pc_, "pressure", it);

        // Flux corrections.
        for (std::size_t k = 0; k < nz; ++k) {
            for (std::size_t j = 0; j < ny; ++j) {
                for (std::size_t i = 0; i < nx; ++i) {
                    const auto c = m_.index(i, j, k);
                    if (i + 1 < nx) {
                        s_.fx[s_.fx_index(i + 1, j, k)] -= cond.ae[c] * (pc_[c + 1] - pc_[c]);
                    } else {
                        s_.fx[s_.fx_index(nx, j, k)] += outlet_coeff(Side::xmax, c, i, j, k) * pc_[c];
                    }
                    if (i == 0) {
                        s_.fx[s_.fx_index(0, j, k)] -= outlet_coeff(Side::xmin, c, i, j, k) * pc_[c];
                    }
                    if (j + 1 < ny) {
                        s_.fy[s_.fy_index(i, j + 1, k)] -= cond.an[c] * (pc_[c + sx] - pc_[c]);
                    } else {
                        s_.fy[s_.fy_index(i, ny, k)] += outlet_coeff(Side::ymax, c, i, j, k) * pc_[c];
                    }
                    if (j == 0) {
                        s_.fy[s_.fy_index(i, 0, k)] -= outlet_coeff(Side::ymin, c, i, j, k) * pc_[c];
                    }
                    if (k + 1 < nz) {
                        s_.fz[s_.fz_index(i, j, k + 1)] -= cond.at[c] * (pc_[c + sxy] - pc_[c]);
                    } else {
                        s_.fz[s_.fz_index(i, j, nz)] += outlet_coeff(Side::zmax, c, i, j, k) * pc_[c];
                    }
                    if (k == 0) {
                        s_.fz[s_.fz_index(i, j, 0)] -= outlet_coeff(Side::zmin, c, i, j, k) * pc_[c];
                    }
                }
            }
        }
        // Cell velocity and pressure corrections.
        std::array<std::vector<double>, 3> gpc;
        for (auto& g : gpc) {
            g.assign(n_, 0.0);
        }
        pressure_gradient(pc_, gpc, true);
        for (std::size_t c = 0; c < n_; ++c) {
            s_.u[c] -= d_[0][c] * gpc[0][c];
            s_.v[c] -= d_[1][c] * gpc[1][c];
            s_.w[c] -= d_[2][c] * gpc[2][c];
            s_.p[c] += cfg_.relax_pressure * pc_[c];
        }
        check_finite(s_.p, "pressure", it);
    }

    void compute_production()
    {
        std::array<std::array<std::vector<double>, 3>, 3> g;
        for (auto& comp : g) {
            for (auto& d : comp) {
                d.assign(n_, 0.0);
            }
        }
        for (std::size_t comp = 0; comp < 3; ++comp) {
            const auto& field = comp == 0 ? s_.u : comp == 1 ? s_.v : s_.w;
            gauss_gradient(field, g[comp], [&](Side side, std::size_t c, std::size_t, std::size_t j, std::size_t k) {
                return velocity_boundary_value(comp, side, c, j, k);
            });
        }
        for (std::size_t c = 0; c < n_; ++c) {
            const double ux = g[0][0][c], uy = g[0][1][c], uz = g[0][2][c];
            const double vx = g[1][0][c], vy = g[1][1][c], vz = g[1][2][c];
            const double wx = g[2][0][c], wy = g[2][1][c], wz = g[2][2][c];
            const double s2 = 2.0 * (ux * ux + vy * vy + wz * wz) + (uy + vx) * (uy + vx) + (uz + wx) * (uz + wx) +
                              (vz + wy) * (vz + wy);
            production_[c] = s_.mu_t[c] * s2;
        }
        const double cmu14 = std::pow(tc_.c_mu, 0.25);
        const double z0 = bc_.inlet.roughness_length;
        for (const auto& wc : walls_) {
            const double ut = cmu14 * std::sqrt(s_.k[wc.cell]);
            const double tau = wall_shear_coefficient(wc) * tangential_speed(wc);
            production_[wc.cell] = tau * ut / (tc_.kappa * (wc.distance + z0));
        }
    }

    double wall_epsilon(const WallCell& wc) const
    {
        const double z0 = bc_.inlet.roughness_length;
        return std::pow(tc_.c_mu, 0.75) * std::pow(s_.k[wc.cell], 1.5) / (tc_.kappa * (wc.distance + z0));
    }

    SideConditions turbulence_conditions(const std::vector<double>& inlet_values) const
    {
        SideConditions bcs;
        for (auto side : detail::all_sides) {
            auto& bc = bcs[static_cast<std::size_t>(side)];
            switch (sides_[side]) {
            case BoundaryKind::velocity_inlet:
                bc.treatment = FaceTreatment::fixed_value;
                bc.values = inlet_values;
                break;
            case BoundaryKind::pressure_outlet: bc.treatment = FaceTreatment::outflow; break;
            default: bc.treatment = FaceTreatment::zero_flux; break;
            }
        }
        return bcs;
    }

    double finish_scalar(std::vector<double>& phi, double alpha, double floor, std::size_t& clamps, const char* name,
                         int it)
    {
        const double num = a_.absolute_residual_sum(phi);
        double den = 0.0;
        for (std::size_t c = 0; c < n_; ++c) {
            den += a_.ap[c] * std::abs(phi[c]);
        }
        for (std::size_t c = 0; c < n_; ++c) {
            a_.ap[c] /= alpha;
            a_.b[c] += (1.0 - alpha) * a_.ap[c] * phi[c];
        }
        solve_bicgstab(a_, phi, cfg_.momentum_rel_tol, 0.0, cfg_.inner_max_iterations);
        check_finite(phi, name, it);
        for (auto& x : phi) {
            if (x < floor) {
                x = floor;
                ++clamps;
            }
        }
        return scaled(num, den);
    }

    double solve_k(int it)
    {
        std::vector<double> gamma(n_);
        for (std::size_t c = 0; c < n_; ++c) {
            gamma[c] = fluid_.viscosity + s_.mu_t[c] / tc_.sigma_k;
        }
        a_.reset();
        detail::assemble_convection_diffusion(m_, s_, fluid_.density, gamma, turbulence_conditions(inlet_k_), a_);
        const double rho = fluid_.density;
        // Ambient terms keep (k_floor, eps_floor) a steady solution in still air.
        const double eps_amb = cfg_.epsilon_floor;
        for (std::size_t c = 0; c < n_; ++c) {
            const double vol = m_.volume(c);
            double eps = s_.epsilon[c];
            if (wall_of_[c] >= 0) {
                eps = wall_epsilon(walls_[static_cast<std::size_t>(wall_of_[c])]);
            }
            a_.b[c] += (production_[c] + rho * eps_amb) * vol;
            a_.ap[c] += rho * eps / s_.k[c] * vol;
        }
        return finish_scalar(s_.k, cfg_.relax_k, cfg_.k_floor, s_.k_clamps, "k", it);
    }

    double solve_epsilon(int it)
    {
        std::vector<double> gamma(n_);
        for (std::size_t c = 0; c < n_; ++c) {
            gamma[c] = fluid_.viscosity + s_.mu_t[c] / tc_.sigma_eps;
        }
        a_.reset();
        detail::assemble_convection_diffusion(m_, s_, fluid_.density, gamma, turbulence_conditions(inlet_eps_), a_);
        const double rho = fluid_.density;
        const double amb = tc_.c2_eps * rho * cfg_.epsilon_floor * cfg_.epsilon_floor / cfg_.k_floor;
        for (std::size_t c = 0; c < n_; ++c) {
            const double vol = m_.volume(c);
            const double ratio = s_.epsilon[c] / s_.k[c];
            a_.b[c] += (tc_.c1_eps * ratio * production_[c] + amb) * vol;
            a_.ap[c] += tc_.c2_eps * rho * ratio * vol;
        }
        for (const auto& wc : walls_) {
            const auto c = wc.cell;
            a_.ap[c] = 1.0;
            a_.aw[c] = a_.ae[c] = a_.as[c] = a_.an[c] = a_.ab[c] = a_.at[c] = 0.0;
            a_.b[c] = std::max(wall_epsilon(wc), cfg_.epsilon_floor);
        }
        return finish_scalar(s_.epsilon, cfg_.relax_epsilon, cfg_.epsilon_floor, s_.epsilon_clamps, "epsilon", it);
    }

    const StructuredMesh& m_;
    FluidProperties fluid_;
    BoundarySet bc_;
    TurbulenceConstants tc_;
    SolverConfig cfg_;
    SideKinds sides_;
    bool turbulent_;
    std::size_t n_;
    FlowState s_;
    StencilMatrix a_;
    std::array<std::vector<double>, 3> d_;
    std::array<std::vector<double>, 3> gp_;
    std::vector<double> mu_eff_, pc_, production_;
    std::vector<double> inlet_u_, inlet_k_, inlet_eps_;
    std::vector<WallCell> walls_;
    std::vector<long> wall_of_;
};

} // namespace

FlowState uniform_flow(const StructuredMesh& mesh, Point3 velocity, double k, double epsilon, const FluidProperties& fluid,
                       const TurbulenceConstants& tc)
{
    if (!(k > 0.0) || !(epsilon > 0.0)) {
        throw ValidationError("uniform flow needs k > 0 and epsilon > 0");
    }
    FlowState s;
    allocate(s, mesh);
    std::fill(s.u.begin(), s.u.end(), velocity.x);
    std::fill(s.v.begin(), s.v.end(), velocity.y);
    std::fill(s.w.begin(), s.w.end(), velocity.z);
    std::fill(s.k.begin(), s.k.end(), k);
    std::fill(s.epsilon.begin(), s.epsilon.end(), epsilon);
    eddy_viscosity(s, fluid, tc);
    for (std::size_t kk = 0; kk < s.nz; ++kk) {
        for (std::size_t j = 0; j < s.ny; ++j) {
            for (std::size_t i = 0; i <= s.nx; ++i) {
                s.fx[s.fx_index(i, j, kk)] = velocity.x * mesh.dy()[j] * mesh.dz()[kk];
            }
        }
    }
    for (std::size_t kk = 0; kk < s.nz; ++kk) {
        for (std::size_t j = 0; j <= s.ny; ++j) {
            for (std::size_t i = 0; i < s.nx; ++i) {
                s.fy[s.fy_index(i, j, kk)] = velocity.y * mesh.dx()[i] * mesh.dz()[kk];
            }
        }
    }
    for (std::size_t kk = 0; kk <= s.nz; ++kk) {
        for (std::size_t j = 0; j < s.ny; ++j) {
            for (std::size_t i = 0; i < s.nx; ++i) {
                s.fz[s.fz_index(i, j, kk)] = velocity.z * mesh.dx()[i] * mesh.dy()[j];
            }
        }
    }
    s.converged = true;
    return s;
}

FlowState solve_flow(const StructuredMesh& mesh, const FluidProperties& fluid, const BoundarySet& bc,
                     const TurbulenceConstants& tc, const SolverConfig& cfg)
{
    fluid.validate();
    tc.validate();
    bc.validate(tc);
    cfg.validate();
    SimpleSolver solver(mesh, fluid, bc, tc, cfg);
    return solver.run();
}

std::vector<double> cell_mass_imbalance(const FlowState& s)
{
    std::vector<double> out(s.nx * s.ny * s.nz);
    for (std::size_t k = 0; k < s.nz; ++k) {
        for (std::size_t j = 0; j < s.ny; ++j) {
            for (std::size_t i = 0; i < s.nx; ++i) {
                out[i + s.nx * (j + s.ny * k)] = s.fx[s.fx_index(i + 1, j, k)] - s.fx[s.fx_index(i, j, k)] +
                                                  s.fy[s.fy_index(i, j + 1, k)] - s.fy[s.fy_index(i, j, k)] +
                                                  s.fz[s.fz_index(i, j, k + 1)] - s.fz[s.fz_index(i, j, k)];
            }
        }
    }
    return out;
}

FlowBalance boundary_balance(const FlowState& s)
{
    FlowBalance b;
    auto account = [&](double outward) {
        if (outward > 0.0) {
            b.outflow += outward;
        } else {
            b.inflow -= outward;
        }
    };
    for (std::size_t k = 0; k < s.nz; ++k) {
        for (std::size_t j = 0; j < s.ny; ++j) {
            account(-s.fx[s.fx_index(0, j, k)]);
            account(s.fx[s.fx_index(s.nx, j, k)]);
        }
    }
    for (std::size_t k = 0; k < s.nz; ++k) {
        for (std::size_t i = 0; i < s.nx; ++i) {
            account(-s.fy[s.fy_index(i, 0, k)]);
            account(s.fy[s.fy_index(i, s.ny, k)]);
        }
    }
    for (std::size_t j = 0; j < s.ny; ++j) {
        for (std::size_t i = 0; i < s.nx; ++i) {
            account(-s.fz[s.fz_index(i, j, 0)]);
            account(s.fz[s.fz_index(i, j, s.nz)]);
        }
    }
    return b;
}

void write_flow_vtk(const StructuredMesh& mesh, const FlowState& state, const std::filesystem::path& path)
{
    write_vtk_structured(mesh, path, "roadcap flow field",
                         {{"pressure", state.p}, {"k", state.k}, {"epsilon", state.epsilon}, {"mu_t", state.mu_t}},
                         {{"velocity", state.u, state.v, state.w}});
}

void write_residual_csv(const FlowState& state, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("iteration,continuity,u,v,w,k,epsilon\n");
        for (const auto& r : state.residuals) {
            out.print("{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n", r.iteration, r.continuity, r.u, r.v, r.w, r.k,
                      r.epsilon);
        }
    } catch (const std::system_error& e) {
        throw IoError("cannot write '" + path.string() + "': " + e.what());
    }
}

} // namespace roadcap
