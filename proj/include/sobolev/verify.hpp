#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sobolev/fem.hpp"

namespace sobolev {

/// One named pass/fail comparison inside a report.
struct Check {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool passed = false;
};

/// Result of one experiment: a table with one row per measured level and the
/// checks derived from it.
struct Report {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::string> columns;  ///< starts with "level", "h"
    std::vector<std::vector<double>> rows;
    double fitted_value = 0.0;
    double tolerance = 0.0;
    std::vector<Check> checks;

    bool pass() const;
    /// Column index by name; throws if absent.
    std::size_t column(std::string_view name) const;
};

/// Least-squares slope of log(y) against log(x).
double fitted_rate(const std::vector<double>& x, const std::vector<double>& y);

// Poincare constants ------------------------------------------------------------

struct EigenEstimate {
    double constant = 0.0;    ///< 1 / sqrt(eigenvalue)
    double eigenvalue = 0.0;
    int iterations = 0;
};

/// Wirtinger mode: smallest nonzero eigenvalue of the Neumann stiffness/mass pencil.
EigenEstimate poincare_constant_2(const Mesh& mesh);
/// Trace mode: functions vanishing on the vertices of `vanishing_on`.
EigenEstimate poincare_constant_2(const BoundaryPartition& partition, const Mesh& mesh, Region vanishing_on);

/// inf_a ||u - a||_p / ||grad u||_p; the scalar L^p norm uses centroid values
/// (exact mass norm at p = 2). Infinity for constant u.
double poincare_quotient(const ScalarField& u, double p);

struct AscentResult {
    double initial = 0.0;
    double final = 0.0;
    int iterations = 0;
};

/// Quotient ascent from `start` using the (K + M)-preconditioned gradient of log Q.
AscentResult poincare_ascent(const ScalarField& start, double p, int max_iterations = 300);

struct PoincareBound {
    double value = 0.0;  ///< max final quotient over all runs
    std::vector<double> initial_quotients;
    std::vector<double> final_quotients;
};

/// Runs `runs` ascents from smooth seeded random fields that do not depend on the mesh resolution.
PoincareBound poincare_lower_bound_p(const Mesh& mesh, double p, int runs, std::uint64_t seed,
                                     int max_iterations = 300);

/// Smooth random field from a few seeded low-frequency modes on the mesh's bounding box.
ScalarField smooth_random_field(const Mesh& mesh, std::uint64_t seed);

// Experiments --------------------------------------------------------------------

/// beta = x / |x|^2 on geometrically graded annuli against a radial plateau u.
/// Level l uses 32 * 2^l angular cells. Rejects p <= 2.
Report counterexample_punctured(double p, const std::vector<double>& r_in_schedule, int levels, double r_out = 1.0);

struct HolderEstimate {
    std::optional<double> alpha;  ///< nullopt for constant u
    double fit_quality = 0.0;     ///< coefficient of determination of the fit
    std::vector<double> log_distance;     ///< regression inputs (independent of u)
    std::vector<double> log_oscillation;  ///< regression outputs
    std::size_t pairs = 0;
};

/// Envelope regression of log max|u(x) - u(y)| against log d_M(x, y) over the
/// lower half of the log-distance range.
HolderEstimate holder_exponent(const ScalarField& u, std::size_t n_pairs, std::uint64_t seed);

enum class StudyProblem { ManufacturedDirichlet, NeumannHarmonic, PlapAffine, IbpSmooth };

StudyProblem parse_study_problem(std::string_view name);
std::string_view to_string(StudyProblem problem);

/// Unit-square study on n = 8 * 2^l, l < levels (levels >= 3).
Report convergence_study(StudyProblem problem, int levels);

}  // namespace sobolev
