#include "sobolev/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "sobolev/error.hpp"

namespace sobolev {

CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b, Vector& x, double tol, int max_iterations) {
    const Eigen::Index n = b.size();
    if (a.rows() != n || a.cols() != n) throw InvalidArgument("conjugate_gradient: dimension mismatch");
    if (x.size() != n) x = Vector::Zero(n);
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        x.setZero();
        return {};
    }

    Vector inv_diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = a.coeff(i, i);
        inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }

    Vector r = b - a * x;
    double res = r.norm() / b_norm;
    if (res <= tol) return {0, res};
    Vector z = inv_diag.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    Vector ap(n);
    for (int it = 1; it <= max_iterations; ++it) {
        ap.noalias() = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) throw NumericalError("conjugate_gradient: matrix is not positive definite along the search direction", res, it);
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        res = r.norm() / b_norm;
        if (res <= tol) {
            // Confirm with the true residual; recursion drift can fake convergence.
            const double true_res = (b - a * x).norm() / b_norm;
            if (true_res <= tol) return {it, true_res};
            r = b - a * x;
            res = true_res;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    char msg[128];
    std::snprintf(msg, sizeof msg, "conjugate_gradient: no convergence after %d iterations (relative residual %.3g)",
                  max_iterations, res);
    throw NumericalError(msg, res, max_iterations);
}

SparseMatrix submatrix(const SparseMatrix& a, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    std::vector<Eigen::Index> col_map(static_cast<std::size_t>(a.cols()), -1);
    for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = static_cast<Eigen::Index>(j);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (SparseMatrix::InnerIterator it(a, static_cast<Eigen::Index>(rows[i])); it; ++it) {
            const auto j = col_map[static_cast<std::size_t>(it.col())];
            if (j >= 0) trips.emplace_back(static_cast<Eigen::Index>(i), j, it.value());
        }
    }
    SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> taken) {
    std::vector<char> mark(n, 0);
    for (auto i : taken) {
        if (i < n) mark[i] = 1;
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mark[i]) out.push_back(i);
    }
    return out;
}

}  // namespace sobolev
