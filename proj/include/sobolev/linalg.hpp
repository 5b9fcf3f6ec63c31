#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstddef>
#include <span>
#include <vector>

namespace sobolev {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// (semi-)definite matrix. `x` holds the starting point on entry and the
/// solution on exit. Converged when ||b - A x|| <= tol * ||b||; a zero right
/// hand side returns x = 0 immediately. Throws NumericalError after
/// `max_iterations` with the residual reached.
CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b, Vector& x, double tol, int max_iterations);

/// Submatrix a(rows, cols); index lists must be ascending.
SparseMatrix submatrix(const SparseMatrix& a, std::span<const std::size_t> rows, std::span<const std::size_t> cols);

/// Indices in [0, n) not listed in `taken` (ascending, deduplicated).
std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> taken);

}  // namespace sobolev
