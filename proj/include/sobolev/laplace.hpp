#pragma once

#include <optional>
#include <vector>

#include "sobolev/fem.hpp"

namespace sobolev {

struct LinearSolveOptions {
    double tol = 1e-12;                ///< relative residual of the reduced system
    std::optional<int> max_iterations; ///< default 20 * (free node count)
    /// Starting nodal values for CG; only free-node entries are used.
    std::optional<std::vector<double>> initial_guess;
};

/// Delta u = g on M, u = f on Gamma_D, normal flux theta on Gamma_N.
class MixedProblem {
public:
    /// `theta` must be edge data on the Neumann region; omitted means zero flux.
    MixedProblem(const BoundaryPartition& partition, ScalarField g, ScalarField f,
                 std::optional<BoundaryTrace> theta = std::nullopt);

    const Mesh& mesh() const noexcept { return g_.mesh(); }
    const BoundaryPartition& partition() const noexcept { return *partition_; }
    const ScalarField& load() const noexcept { return g_; }
    const ScalarField& dirichlet() const noexcept { return f_; }
    const BoundaryTrace& flux() const noexcept { return theta_; }

private:
    const BoundaryPartition* partition_;
    ScalarField g_;
    ScalarField f_;
    BoundaryTrace theta_;
};

/// Delta u = g on M with flux theta on the whole boundary.
class NeumannProblem {
public:
    /// `tolerance` defaults to 1e-8 (||g||_L2 + ||theta||_L2(boundary) + 1).
    NeumannProblem(ScalarField g, BoundaryTrace theta, std::optional<double> tolerance = std::nullopt);

    const Mesh& mesh() const noexcept { return g_.mesh(); }
    const ScalarField& load() const noexcept { return g_; }
    const BoundaryTrace& flux() const noexcept { return theta_; }
    double tolerance() const noexcept { return tolerance_; }

private:
    ScalarField g_;
    BoundaryTrace theta_;
    double tolerance_;
};

struct LaplaceSolution {
    ScalarField u;
    int iterations = 0;
    double residual = 0.0;  ///< weak_residual of u
    double defect = 0.0;    ///< compatibility defect (pure Neumann only)
};

enum class NeumannGauge { ZeroMean, PinFirstVertex };

LaplaceSolution solve_mixed(const MixedProblem& problem, const LinearSolveOptions& options = {});

/// Throws CompatibilityError when |defect| exceeds the problem tolerance.
LaplaceSolution solve_neumann(const NeumannProblem& problem, const LinearSolveOptions& options = {},
                              NeumannGauge gauge = NeumannGauge::ZeroMean);

/// <g,1> - <theta, tr 1>.
double compatibility_defect(const ScalarField& g, const BoundaryTrace& theta);

/// max over hats v vanishing on Gamma_D of |<grad u, grad v> - <theta, tr v> + <g, v>|,
/// divided by ||u||_W12 + ||g||_L2 + 1.
double weak_residual(const BoundaryPartition& partition, const ScalarField& u, const ScalarField& g,
                     const BoundaryTrace& theta);

}  // namespace sobolev
