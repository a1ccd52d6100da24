#pragma once

// Seven-point stencil systems on a structured grid and the Krylov solvers
// used by the flow and transport equations.
//
// Row convention: ap[c] x[c] = sum_nb a_nb[c] x[nb] + b[c]. Neighbour
// coefficients are stored positive and are zero across domain boundaries.

#include <cstddef>
#include <span>
#include <vector>

namespace roadcap {

class StencilMatrix {
public:
    StencilMatrix() = default;
    StencilMatrix(std::size_t nx, std::size_t ny, std::size_t nz);

    void reset();

    [[nodiscard]] std::size_t nx() const noexcept { return nx_; }
    [[nodiscard]] std::size_t ny() const noexcept { return ny_; }
    [[nodiscard]] std::size_t nz() const noexcept { return nz_; }
    [[nodiscard]] std::size_t size() const noexcept { return ap.size(); }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    /// r = b - A x; returns the L2 norm of r.
    double residual(std::span<const double> x, std::span<double> r) const;
    /// sum |b + sum a_nb x_nb - ap x| over all rows.
    [[nodiscard]] double absolute_residual_sum(std::span<const double> x) const;

    std::vector<double> ap, aw, ae, as, an, ab, at, b;

private:
    std::size_t nx_{0}, ny_{0}, nz_{0};
};

struct SolveStats {
    int iterations{0};
    double initial_residual{0.0};
    double final_residual{0.0};
    bool converged{false};
};

/// Preconditioned conjugate gradients with a diagonal-incomplete-Cholesky
/// preconditioner. The matrix must be symmetric positive definite.
/// Stops when ||r|| <= max(rel_tol ||r0||, abs_tol).
SolveStats solve_pcg(const StencilMatrix& a, std::span<double> x, double rel_tol, double abs_tol, int max_iterations);

/// BiCGSTAB with a diagonal-incomplete-LU preconditioner for the
/// non-symmetric convection-diffusion systems.
SolveStats solve_bicgstab(const StencilMatrix& a, std::span<double> x, double rel_tol, double abs_tol, int max_iterations);

} // namespace roadcap
