#include "roadcap/linear_solver.hpp"

#include <cmath>

namespace roadcap {

StencilMatrix::StencilMatrix(std::size_t nx, std::size_t ny, std::size_t nz)
    : nx_(nx)
    , ny_(ny)
    , nz_(nz)
{
    const auto n = nx * ny * nz;
    for (auto* v : {&ap, &aw, &ae, &as, &an, &ab, &at, &b}) {
        v->assign(n, 0.0);
    }
}

void StencilMatrix::reset()
{
    for (auto* v : {&ap, &aw, &ae, &as, &an, &ab, &at, &b}) {
        std::fill(v->begin(), v->end(), 0.0);
    }
}

namespace {

// Off-diagonal part: sum_nb a_nb x_nb for row c.
inline double neighbour_sum(const StencilMatrix& m, std::span<const double> x, std::size_t c, std::size_t sx,
                            std::size_t sxy)
{
    double s = 0.0;
    if (m.aw[c] != 0.0) s += m.aw[c] * x[c - 1];
    if (m.ae[c] != 0.0) s += m.ae[c] * x[c + 1];
    if (m.as[c] != 0.0) s += m.as[c] * x[c - sx];
    if (m.an[c] != 0.0) s += m.an[c] * x[c + sx];
    if (m.ab[c] != 0.0) s += m.ab[c] * x[c - sxy];
    if (m.at[c] != 0.0) s += m.at[c] * x[c + sxy];
    return s;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

// Diagonal of the DILU/DIC factorisation, stored inverted.
std::vector<double> incomplete_diagonal(const StencilMatrix& m)
{
    const auto sx = m.nx();
    const auto sxy = m.nx() * m.ny();
    std::vector<double> inv(m.size());
    for (std::size_t c = 0; c < m.size(); ++c) {
        double d = m.ap[c];
        if (m.aw[c] != 0.0) d -= m.aw[c] * m.ae[c - 1] * inv[c - 1];
        if (m.as[c] != 0.0) d -= m.as[c] * m.an[c - sx] * inv[c - sx];
        if (m.ab[c] != 0.0) d -= m.ab[c] * m.at[c - sxy] * inv[c - sxy];
        inv[c] = (std::abs(d) > 1e-300) ? 1.0 / d : (m.ap[c] != 0.0 ? 1.0 / m.ap[c] : 1.0);
    }
    return inv;
}

// z = M^-1 r with M = (D + L) D^-1 (D + U).
void apply_preconditioner(const StencilMatrix& m, std::span<const double> inv_d, std::span<const double> r,
                          std::span<double> z)
{
    const auto n = m.size();
    const auto sx = m.nx();
    const auto sxy = m.nx() * m.ny();
    for (std::size_t c = 0; c < n; ++c) {
        double s = r[c];
        if (m.aw[c] != 0.0) s += m.aw[c] * z[c - 1];
        if (m.as[c] != 0.0) s += m.as[c] * z[c - sx];
        if (m.ab[c] != 0.0) s += m.ab[c] * z[c - sxy];
        z[c] = s * inv_d[c];
    }
    for (std::size_t c = n; c-- > 0;) {
        double s = 0.0;
        if (m.ae[c] != 0.0) s += m.ae[c] * z[c + 1];
        if (m.an[c] != 0.0) s += m.an[c] * z[c + sx];
        if (m.at[c] != 0.0) s += m.at[c] * z[c + sxy];
        z[c] += s * inv_d[c];
    }
}

} // namespace

void StencilMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    const auto sx = nx_;
    const auto sxy = nx_ * ny_;
    for (std::size_t c = 0; c < size(); ++c) {
        y[c] = ap[c] * x[c] - neighbour_sum(*this, x, c, sx, sxy);
    }
}

double StencilMatrix::residual(std::span<const double> x, std::span<double> r) const
{
    const auto sx = nx_;
    const auto sxy = nx_ * ny_;
    double s = 0.0;
    for (std::size_t c = 0; c < size(); ++c) {
        r[c] = b[c] + neighbour_sum(*this, x, c, sx, sxy) - ap[c] * x[c];
        s += r[c] * r[c];
    }
    return std::sqrt(s);
}

double StencilMatrix::absolute_residual_sum(std::span<const double> x) const
{
    const auto sx = nx_;
    const auto sxy = nx_ * ny_;
    double s = 0.0;
    for (std::size_t c = 0; c < size(); ++c) {
        s += std::abs(b[c] + neighbour_sum(*this, x, c, sx, sxy) - ap[c] * x[c]);
    }
    return s;
}

SolveStats solve_pcg(const StencilMatrix& a, std::span<double> x, double rel_tol, double abs_tol, int max_iterations)
{
    const auto n = a.size();
    std::vector<double> r(n), z(n), p(n), q(n);
    SolveStats stats;
    stats.initial_residual = a.residual(x, r);
    stats.final_residual = stats.initial_residual;
    const double target = std::max(rel_tol * stats.initial_residual, abs_tol);
    if (stats.initial_residual <= target) {
        stats.converged = true;
        return stats;
    }
    const auto inv_d = incomplete_diagonal(a);
    apply_preconditioner(a, inv_d, r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iterations; ++it) {
        a.multiply(p, q);
        const double pq = dot(p, q);
        if (pq == 0.0) {
            break;
        }
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        stats.iterations = it;
        stats.final_residual = norm2(r);
        if (stats.final_residual <= target) {
            stats.converged = true;
            break;
        }
        apply_preconditioner(a, inv_d, r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }
    return stats;
}

SolveStats solve_bicgstab(const StencilMatrix& a, std::span<double> x, double rel_tol, double abs_tol, int max_iterations)
{
    const auto n = a.size();
    std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
    SolveStats stats;
    stats.initial_residual = a.residual(x, r);
    stats.final_residual = stats.initial_residual;
    const double target = std::max(rel_tol * stats.initial_residual, abs_tol);
    if (stats.initial_residual <= target) {
        stats.converged = true;
        return stats;
    }
    const auto inv_d = incomplete_diagonal(a);
    r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 1; it <= max_iterations; ++it) {
        const double rho_new = dot(r0, r);
        if (rho_new == 0.0) {
            // Breakdown: restart from the current iterate.
            stats.final_residual = a.residual(x, r);
            r0 = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply_preconditioner(a, inv_d, p, ph);
        a.multiply(ph, v);
        const double r0v = dot(r0, v);
        if (r0v == 0.0) {
            break;
        }
        alpha = rho / r0v;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = r[i] - alpha * v[i];
        }
        stats.iterations = it;
        const double s_norm = norm2(s);
        if (s_norm <= target) {
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * ph[i];
            }
            stats.final_residual = s_norm;
            stats.converged = true;
            break;
        }
        apply_preconditioner(a, inv_d, s, sh);
        a.multiply(sh, t);
        const double tt = dot(t, t);
        omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        stats.final_residual = norm2(r);
        if (stats.final_residual <= target) {
            stats.converged = true;
            break;
        }
        if (omega == 0.0) {
            break;
        }
    }
    return stats;
}

} // namespace roadcap
