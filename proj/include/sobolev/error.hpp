#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sobolev {

/// Bad caller input: degenerate parameters, mismatched meshes, invalid tags.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its stopping criterion.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Pure-Neumann data violates <g,1> = <theta, tr 1> beyond the tolerance band.
class CompatibilityError : public std::runtime_error {
public:
    CompatibilityError(const std::string& what, double defect, double tolerance)
        : std::runtime_error(what), defect_(defect), tolerance_(tolerance) {}

    double defect() const noexcept { return defect_; }
    double tolerance() const noexcept { return tolerance_; }

private:
    double defect_;
    double tolerance_;
};

/// Non-convergence of the p-Laplace solver; keeps the best iterate found.
class PlapConvergenceError : public NumericalError {
public:
    PlapConvergenceError(const std::string& what, double stationarity, int iterations,
                         std::vector<double> best_iterate)
        : NumericalError(what, stationarity, iterations), best_(std::move(best_iterate)) {}

    const std::vector<double>& best_iterate() const noexcept { return best_; }

private:
    std::vector<double> best_;
};

}  // namespace sobolev
