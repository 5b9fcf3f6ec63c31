#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sobolev/fem.hpp"

namespace sobolev {

/// How each damped step linearizes the Euler-Lagrange equation.
enum class Linearization : std::uint8_t {
    Newton,   ///< full tensor weight w I + (p-2) s^{(p-4)/2} g g^T
    Kacanov,  ///< scalar weight w = s^{(p-2)/2} (plain reweighted least squares)
};

struct PlapOptions {
    double tol = 1e-10;                ///< normalized stationarity at the final stage
    int max_outer = 200;               ///< damped steps per continuation stage
    double continuation_factor = 1.5;  ///< ratio between consecutive exponents, in (1, 1.5]
    /// Final regularization; nullopt means 1e-8 * scale. Zero is allowed.
    std::optional<double> eps_final;
    /// When set, the warm start is perturbed by seeded noise before continuation.
    std::optional<std::uint64_t> seed;
    Linearization linearization = Linearization::Newton;
    double cg_tol = 1e-12;
};

/// Minimize ||grad u||_p over nodal u with u = f on the vertex set A.
class PlapProblem {
public:
    PlapProblem(ScalarField f, std::vector<std::size_t> constraint, double p, PlapOptions options = {});

    const Mesh& mesh() const noexcept { return f_.mesh(); }
    const ScalarField& datum() const noexcept { return f_; }
    /// Sorted, deduplicated.
    const std::vector<std::size_t>& constraint() const noexcept { return constraint_; }
    double p() const noexcept { return p_; }
    const PlapOptions& options() const noexcept { return options_; }

private:
    ScalarField f_;
    std::vector<std::size_t> constraint_;
    double p_;
    PlapOptions options_;
};

struct StageRecord {
    double p = 2.0;
    double epsilon = 0.0;
    int iterations = 0;
    /// Normalized regularized energy after each accepted step, starting value first.
    std::vector<double> energies;
};

struct CertificateOutcome {
    bool passed = true;
    double worst_margin = 0.0;  ///< min over trials and steps of E(u + t d) - E(u)
    int trials = 0;
    int violations = 0;
};

struct OptimalityReport {
    double energy = 0.0;        ///< ||grad u||_p
    double stationarity = 0.0;  ///< p_stationarity of the returned field
    int iterations = 0;
    std::vector<StageRecord> stages;
    std::optional<CertificateOutcome> certificate;
};

struct PlapSolution {
    ScalarField u;
    OptimalityReport report;
};

/// (|beta| / ||beta||_p)^{p-2} beta elementwise; zero elements and the zero field map to zero.
VectorField sharp_p(const VectorField& beta, double p);

/// ||grad u||_{L^p}.
double p_energy(const ScalarField& u, double p);

/// Throws PlapConvergenceError (carrying the best iterate) when the final stage misses the tolerance.
PlapSolution solve_p_laplace(const PlapProblem& problem);

/// max over hats w vanishing on A of |<sharp_p grad u, grad w>| / (||grad w||_p ||grad u||_p).
/// Zero for constant u.
double p_stationarity(const ScalarField& u, double p, std::span<const std::size_t> constraint);

/// Checks E(u) <= E(u + t d) + 1e-10 scale for `trials` seeded random directions d
/// vanishing on A, normalized to ||grad d||_p = 1, with t in {+-1e-3, +-1e-2} scale
/// and scale = E(u). Directions are uniform noise smoothed by `smoothing_sweeps`
/// neighbour-averaging passes.
OptimalityReport minimality_certificate(const ScalarField& u, double p, std::span<const std::size_t> constraint,
                                        int trials, std::uint64_t seed, int smoothing_sweeps = 4);

/// Same test along caller-supplied directions, which must vanish on A.
OptimalityReport minimality_certificate(const ScalarField& u, double p, std::span<const std::size_t> constraint,
                                        std::span<const ScalarField> directions);

}  // namespace sobolev
