#include "sobolev/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sobolev/error.hpp"
#include "sobolev/laplace.hpp"
#include "sobolev/plaplace.hpp"
#include "sobolev/random.hpp"

namespace sobolev {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

Vector to_vector(const ScalarField& f) { return Eigen::Map<const Vector>(f.values().data(), ix(f.size())); }

ScalarField to_field(const Mesh& mesh, const Vector& v) {
    return ScalarField(mesh, std::vector<double>(v.data(), v.data() + v.size()));
}

Check make_check(std::string name, double value, double bound, bool passed) {
    return Check{std::move(name), value, bound, passed};
}

// Inverse iteration on K y = M x restricted to `free`; deflates constants when asked.
EigenEstimate inverse_iteration(const Mesh& mesh, const std::vector<std::size_t>& free, bool deflate) {
    const SparseMatrix k = submatrix(stiffness_matrix(mesh), free, free);
    const SparseMatrix m = submatrix(mass_matrix(mesh), free, free);
    const auto n = ix(free.size());
    const Vector ones = Vector::Ones(n);
    const double area = ones.dot(m * ones);
    auto project = [&](Vector& v) {
        if (deflate) v.array() -= ones.dot(m * v) / area;
        v /= std::sqrt(v.dot(m * v));
    };

    Vector x(n);
    for (Eigen::Index q = 0; q < n; ++q) {
        const Point pt = mesh.vertex(free[static_cast<std::size_t>(q)]);
        x[q] = pt.x + 0.37 * pt.y + 0.11 * pt.x * pt.y + 0.05 * pt.x * pt.x + 0.5;
    }
    project(x);
    double lambda = x.dot(k * x);
    constexpr int kMaxIterations = 1000;
    for (int it = 1; it <= kMaxIterations; ++it) {
        Vector y = x / std::max(lambda, 1e-300);
        Vector b = m * x;
        if (deflate) b.array() -= b.mean();  // exact consistency with the singular K
        // Mx is O(h^2) smaller than K y, so 1e-10 is near the attainable relative residual on fine meshes.
        conjugate_gradient(k, b, y, 1e-10, static_cast<int>(20 * free.size()) + 100);
        project(y);
        const double next = y.dot(k * y);
        x = std::move(y);
        if (std::abs(next - lambda) <= 1e-8 * next) {
            return {1.0 / std::sqrt(next), next, it};
        }
        lambda = next;
    }
    throw NumericalError("poincare_constant_2: inverse iteration did not converge", lambda, kMaxIterations);
}

// argmin_a sum |T| |v_T - a|^p by safeguarded Newton on the monotone derivative.
double best_constant(std::span<const double> v, std::span<const double> w, double p) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi == lo) return lo;
    const double width = hi - lo;
    double a = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double h = 0.0, dh = 0.0;
        for (std::size_t t = 0; t < v.size(); ++t) {
            const double r = a - v[t];
            const double m = std::abs(r);
            if (m == 0.0) continue;
            const double pw = std::pow(m, p - 2.0);
            h += w[t] * pw * r;
            dh += w[t] * (p - 1.0) * pw;
        }
        if (h > 0.0) hi = a;
        else if (h < 0.0) lo = a;
        else return a;
        double next = a - h / dh;
        if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 1e-15 * width || hi - lo <= 1e-15 * width) return next;
        a = next;
    }
    return a;
}

struct QuotientParts {
    double a = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    std::vector<double> centroid_values;
    std::vector<double> weights;
};

QuotientParts quotient_parts(const ScalarField& u, double p) {
    const Mesh& mesh = u.mesh();
    QuotientParts q;
    q.denominator = lp_norm(gradient(u), p);
    if (p == 2.0) {
        q.a = scalar_inner(u, ScalarField::constant(mesh, 1.0)) / mesh.total_area();
        q.numerator = lp_norm(u - ScalarField::constant(mesh, q.a), 2.0);
        return q;
    }
    q.centroid_values.resize(mesh.num_triangles());
    q.weights.resize(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& [i, j, k] = mesh.triangle(t);
        q.centroid_values[t] = (u[i] + u[j] + u[k]) / 3.0;
        q.weights[t] = mesh.area(t);
    }
    q.a = best_constant(q.centroid_values, q.weights, p);
    q.numerator = lp_norm(u - ScalarField::constant(mesh, q.a), p);
    return q;
}

// Gradient of log Q with respect to nodal values.
Vector log_quotient_gradient(const ScalarField& u, double p, const QuotientParts& q, const SparseMatrix& mass) {
    const Mesh& mesh = u.mesh();
    Vector dn = Vector::Zero(ix(mesh.num_vertices()));
    if (p == 2.0) {
        Vector shifted = to_vector(u);
        shifted.array() -= q.a;
        dn = mass * shifted / (q.numerator * q.numerator);
    } else {
        const double scale = std::pow(q.numerator, -p);
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const double r = q.centroid_values[t] - q.a;
            if (r == 0.0) continue;
            const double c = scale * mesh.area(t) * std::pow(std::abs(r), p - 2.0) * r / 3.0;
            for (auto i : mesh.triangle(t)) dn[ix(i)] += c;
        }
    }
    const VectorField g = gradient(u);
    const double scale = std::pow(q.denominator, -p);
    Vector dd = Vector::Zero(ix(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double m = norm(g[t]);
        if (m == 0.0) continue;
        const double c = scale * mesh.area(t) * std::pow(m, p - 2.0);
        const auto& tri = mesh.triangle(t);
        const auto& sg = mesh.shape_gradients(t);
        for (int i = 0; i < 3; ++i) dd[ix(tri[i])] += c * dot(g[t], sg[i]);
    }
    return dn - dd;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y, double* r_squared) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    if (r_squared) *r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return slope;
}

}  // namespace

bool Report::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::size_t Report::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw InvalidArgument("Report: no column named " + std::string(name));
}

double fitted_rate(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fitted_rate: need two or more matching samples");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return least_squares_slope(lx, ly, nullptr);
}

// Poincare ----------------------------------------------------------------------------

EigenEstimate poincare_constant_2(const Mesh& mesh) {
    std::vector<std::size_t> all(mesh.num_vertices());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return inverse_iteration(mesh, all, true);
}

EigenEstimate poincare_constant_2(const BoundaryPartition& partition, const Mesh& mesh, Region vanishing_on) {
    if (partition.mesh_fingerprint() != mesh.fingerprint())
        throw InvalidArgument("poincare_constant_2: partition belongs to another mesh");
    const auto& pinned = partition.vertices(vanishing_on);
    if (pinned.empty()) throw InvalidArgument("poincare_constant_2: trace region is empty");
    return inverse_iteration(mesh, complement(mesh.num_vertices(), pinned), false);
}

double poincare_quotient(const ScalarField& u, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("poincare_quotient: p must lie in (1, inf)");
    const QuotientParts q = quotient_parts(u, p);
    if (q.denominator == 0.0) return std::numeric_limits<double>::infinity();
    return q.numerator / q.denominator;
}

AscentResult poincare_ascent(const ScalarField& start, double p, int max_iterations) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("poincare_ascent: p must lie in (1, inf)");
    const Mesh& mesh = start.mesh();
    const SparseMatrix mass = mass_matrix(mesh);
    const SparseMatrix sobolev_metric = stiffness_matrix(mesh) + mass;

    QuotientParts q = quotient_parts(start, p);
    if (q.denominator == 0.0) throw InvalidArgument("poincare_ascent: start field must be nonconstant");
    // Work with the normalized representative (u - a) / ||u - a||_p; Q is unchanged.
    ScalarField u = (1.0 / q.numerator) * (start - ScalarField::constant(mesh, q.a));
    q = quotient_parts(u, p);
    AscentResult result;
    result.initial = q.numerator / q.denominator;
    double value = result.initial;

    double step = 1.0;
    int stalls = 0;
    for (int it = 0; it < max_iterations; ++it) {
        const Vector grad = log_quotient_gradient(u, p, q, mass);
        Vector dir = Vector::Zero(grad.size());
        conjugate_gradient(sobolev_metric, grad, dir, 1e-10, static_cast<int>(20 * mesh.num_vertices()));
        bool improved = false;
        for (int tries = 0; tries < 40; ++tries) {
            ScalarField cand = u + step * to_field(mesh, dir);
            const QuotientParts qc = quotient_parts(cand, p);
            if (qc.denominator > 0.0 && qc.numerator / qc.denominator > value) {
                const double gain = qc.numerator / qc.denominator - value;
                stalls = gain <= 1e-12 * value ? stalls + 1 : 0;
                value = qc.numerator / qc.denominator;
                u = (1.0 / qc.numerator) * (cand - ScalarField::constant(mesh, qc.a));
                q = quotient_parts(u, p);
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        result.iterations = it + 1;
        if (!improved || stalls >= 5) break;
    }
    // Re-evaluate on the final explicit field so the bound is a true quotient.
    result.final = std::max(result.initial, q.numerator / q.denominator);
    return result;
}

ScalarField smooth_random_field(const Mesh& mesh, std::uint64_t seed) {
    Point lo = mesh.vertex(0), hi = lo;
    for (const auto& v : mesh.vertices()) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
    }
    const double diam = std::max(norm(hi - lo), 1e-300);
    Rng rng(seed);
    struct Mode {
        double kx, ky, phase, amp;
    };
    std::vector<Mode> modes(6);
    for (std::size_t m = 0; m < modes.size(); ++m) {
        modes[m] = {uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, 0.0, 2.0 * kPi),
                    uniform(rng, -1.0, 1.0) / static_cast<double>(m + 1)};
    }
    return ScalarField::interpolate(mesh, [&](Point pt) {
        const double x = (pt.x - lo.x) / diam, y = (pt.y - lo.y) / diam;
        double acc = x - 0.5;  // keeps the field nonconstant for every seed
        for (const auto& md : modes) acc += md.amp * std::cos(2.0 * kPi * (md.kx * x + md.ky * y) + md.phase);
        return acc;
    });
}

PoincareBound poincare_lower_bound_p(const Mesh& mesh, double p, int runs, std::uint64_t seed, int max_iterations) {
    if (runs < 1) throw InvalidArgument("poincare_lower_bound_p: runs must be >= 1");
    PoincareBound bound;
    for (int r = 0; r < runs; ++r) {
        const ScalarField start = smooth_random_field(mesh, derive_seed(seed, "poincare-run-" + std::to_string(r)));
        const AscentResult a = poincare_ascent(start, p, max_iterations);
        bound.initial_quotients.push_back(a.initial);
        bound.final_quotients.push_back(a.final);
        bound.value = std::max(bound.value, a.final);
    }
    return bound;
}

// Punctured disk ------------------------------------------------------------------------

Report counterexample_punctured(double p, const std::vector<double>& r_in_schedule, int levels, double r_out) {
    if (!(p > 2.0))
        throw InvalidArgument("counterexample_punctured: requires p > 2; for p <= p_M(A) = 2 the vanishing-trace "
                              "integration by parts holds and no counterexample exists");
    if (r_in_schedule.empty()) throw InvalidArgument("counterexample_punctured: empty r_in schedule");
    if (levels < 1) throw InvalidArgument("counterexample_punctured: levels must be >= 1");
    const double r_max = *std::max_element(r_in_schedule.begin(), r_in_schedule.end());
    const double r1 = 2.0 * r_max;
    const double r2 = 0.8 * r_out;
    if (!(r1 < r2) || *std::min_element(r_in_schedule.begin(), r_in_schedule.end()) <= 0.0)
        throw InvalidArgument("counterexample_punctured: need 0 < r_in and 2 max(r_in) < 0.8 r_out");
    const double q = p / (p - 1.0);

    Report report;
    report.experiment = "counterexample_punctured";
    report.parameters = {{"p", std::to_string(p)}, {"p_conjugate", std::to_string(q)}, {"r1", std::to_string(r1)},
                         {"r2", std::to_string(r2)}, {"r_out", std::to_string(r_out)}, {"levels", std::to_string(levels)}};
    report.columns = {"level", "h", "r_in", "n_angular", "n_radial", "R", "beta_lq_pow", "beta_lq_pow_exact",
                      "beta_l2_sq", "beta_l2_sq_exact"};

    auto plateau = [&](Point pt) {
        const double r = norm(pt);
        if (r <= r1) return 1.0;
        if (r >= r2) return 0.0;
        return (r2 - r) / (r2 - r1);
    };
    std::vector<double> finest_r;
    for (double r_in : r_in_schedule) {
        for (int level = 0; level < levels; ++level) {
            const std::size_t n_ang = 32u << level;
            const double ratio = 1.0 + 2.0 * kPi / static_cast<double>(n_ang);
            const auto n_rad = static_cast<std::size_t>(std::ceil(std::log(r_out / r_in) / std::log(ratio)));
            const Mesh mesh = build_annulus(r_in, r_out, n_rad, n_ang, RadialGrading::Geometric);
            const VectorField beta = VectorField::sample(mesh, [](Point c) { return (1.0 / dot(c, c)) * c; });
            const ScalarField u = ScalarField::interpolate(mesh, plateau);
            // The analytic divergence of beta is zero, so R is the volume term alone.
            const double r_value = vector_inner(beta, gradient(u));
            double lq = 0.0, l2 = 0.0;
            for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
                const double m = norm(beta[t]);
                lq += mesh.area(t) * std::pow(m, q);
                l2 += mesh.area(t) * m * m;
            }
            const double lq_exact = 2.0 * kPi * (std::pow(r_out, 2.0 - q) - std::pow(r_in, 2.0 - q)) / (2.0 - q);
            const double l2_exact = 2.0 * kPi * std::log(r_out / r_in);
            report.rows.push_back({static_cast<double>(level), mesh.max_edge_length(), r_in, static_cast<double>(n_ang),
                                   static_cast<double>(n_rad), r_value, lq, lq_exact, l2, l2_exact});
            if (level + 1 == levels) {
                finest_r.push_back(std::abs(r_value));
                const std::string tag = "r_in=" + std::to_string(r_in);
                const double flux_err = std::abs(std::abs(r_value) - 2.0 * kPi) / (2.0 * kPi);
                report.checks.push_back(make_check("flux_2pi " + tag, flux_err, 0.05, flux_err <= 0.05));
                const double l2_err = std::abs(l2 - l2_exact) / l2_exact;
                report.checks.push_back(make_check("l2_log_growth " + tag, l2_err, 0.03, l2_err <= 0.03));
                const double lq_limit = 2.0 * kPi * std::pow(r_out, 2.0 - q) / (2.0 - q);
                report.checks.push_back(make_check("lq_bounded " + tag, lq / lq_limit, 1.05, lq <= 1.05 * lq_limit));
            }
        }
    }
    const auto [mn, mx] = std::minmax_element(finest_r.begin(), finest_r.end());
    const double spread = *mx / *mn - 1.0;
    report.checks.push_back(make_check("r_in_independence", spread, 0.02, spread <= 0.02));
    report.fitted_value = finest_r.back();
    report.tolerance = 0.05;
    return report;
}

// Holder ---------------------------------------------------------------------------------

HolderEstimate holder_exponent(const ScalarField& u, std::size_t n_pairs, std::uint64_t seed) {
    const Mesh& mesh = u.mesh();
    const std::size_t n = mesh.num_vertices();
    if (n_pairs == 0) throw InvalidArgument("holder_exponent: n_pairs must be positive");
    HolderEstimate est;
    const auto [lo_it, hi_it] = std::minmax_element(u.values().begin(), u.values().end());
    if (*lo_it == *hi_it) return est;

    // Sources are a seeded random subset; every source pairs with all vertices.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "holder-sources"));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const std::size_t sources = n_pairs >= n * n ? n : std::min(n, (n_pairs + n - 1) / n);

    // Scales below the coarsest nearest-neighbour distance only see the finest part of a
    // graded mesh, so binning starts there.
    std::vector<double> dist, osc;
    double cover = 0.0;
    for (std::size_t s = 0; s < sources; ++s) {
        const std::size_t src = order[s];
        const auto d = inner_metric_from(mesh, src);
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == src || !std::isfinite(d[j]) || d[j] <= 0.0) continue;
            dist.push_back(d[j]);
            osc.push_back(std::abs(u[src] - u[j]));
            nearest = std::min(nearest, d[j]);
        }
        if (std::isfinite(nearest)) cover = std::max(cover, nearest);
    }
    est.pairs = dist.size();
    if (dist.empty()) return est;

    constexpr int kBins = 12;
    const double lmin = std::log(cover);
    const double lmax = std::log(*std::max_element(dist.begin(), dist.end()));
    if (!(lmax > lmin)) return est;
    const double width = (lmax - lmin) / kBins;
    std::vector<double> bin_dist(kBins, 0.0), bin_osc(kBins, 0.0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
        if (dist[k] < cover) continue;
        const int b = std::min(kBins - 1, static_cast<int>((std::log(dist[k]) - lmin) / width));
        bin_dist[static_cast<std::size_t>(b)] = std::max(bin_dist[static_cast<std::size_t>(b)], dist[k]);
        bin_osc[static_cast<std::size_t>(b)] = std::max(bin_osc[static_cast<std::size_t>(b)], osc[k]);
    }
    for (int b = 0; b < kBins / 2; ++b) {
        const auto bb = static_cast<std::size_t>(b);
        if (bin_dist[bb] <= 0.0 || bin_osc[bb] <= 0.0) continue;
        est.log_distance.push_back(std::log(bin_dist[bb]));
        est.log_oscillation.push_back(std::log(bin_osc[bb]));
    }
    if (est.log_distance.size() < 2) return est;
    double r2 = 0.0;
    est.alpha = least_squares_slope(est.log_distance, est.log_oscillation, &r2);
    est.fit_quality = r2;
    return est;
}

// Convergence studies ------------------------------------------------------------------------

StudyProblem parse_study_problem(std::string_view name) {
    if (name == "manufactured_dirichlet") return StudyProblem::ManufacturedDirichlet;
    if (name == "neumann_harmonic") return StudyProblem::NeumannHarmonic;
    if (name == "plap_affine") return StudyProblem::PlapAffine;
    if (name == "ibp_smooth") return StudyProblem::IbpSmooth;
    throw InvalidArgument("unknown convergence problem '" + std::string(name) + "'");
}

std::string_view to_string(StudyProblem problem) {
    switch (problem) {
        case StudyProblem::ManufacturedDirichlet: return "manufactured_dirichlet";
        case StudyProblem::NeumannHarmonic: return "neumann_harmonic";
        case StudyProblem::PlapAffine: return "plap_affine";
        case StudyProblem::IbpSmooth: return "ibp_smooth";
    }
    return "unknown";
}

Report convergence_study(StudyProblem problem, int levels) {
    if (levels < 3) throw InvalidArgument("convergence_study: levels must be >= 3");
    Report report;
    report.experiment = std::string(to_string(problem));
    report.parameters = {{"levels", std::to_string(levels)}, {"domain", "unit_square"}};
    std::vector<double> hs, errors;
    double worst_residual = 0.0;

    for (int level = 0; level < levels; ++level) {
        const std::size_t n = 8u << level;
        const Mesh mesh = build_unit_square(n);
        const double h = 1.0 / static_cast<double>(n);
        switch (problem) {
            case StudyProblem::ManufacturedDirichlet: {
                const TagRule rules[] = {tag_everything(BoundaryKind::Dirichlet)};
                const BoundaryPartition part = tag_boundary(mesh, rules);
                auto exact = [](Point pt) { return std::sin(kPi * pt.x) * std::sin(kPi * pt.y); };
                const ScalarField f = ScalarField::interpolate(mesh, exact);
                const MixedProblem mp(part, -2.0 * kPi * kPi * f, f);
                const LaplaceSolution sol = solve_mixed(mp);
                const double err = l2_error(sol.u, exact);
                hs.push_back(h);
                errors.push_back(err);
                worst_residual = std::max(worst_residual, sol.residual);
                report.rows.push_back({static_cast<double>(level), h, err, sol.residual, static_cast<double>(sol.iterations)});
                break;
            }
            case StudyProblem::NeumannHarmonic: {
                const TagRule rules[] = {tag_everything(BoundaryKind::Neumann)};
                const BoundaryPartition part = tag_boundary(mesh, rules);
                const BoundaryTrace theta = BoundaryTrace::edge_function(
                    mesh, part, Region::Whole, [](Point m, Vec2 nu) { return 2.0 * m.x * nu.x - 2.0 * m.y * nu.y; });
                const NeumannProblem np(ScalarField::constant(mesh, 0.0), theta);
                const LaplaceSolution sol = solve_neumann(np);
                // x^2 - y^2 has mean zero on the unit square.
                const double err = l2_error(sol.u, [](Point pt) { return pt.x * pt.x - pt.y * pt.y; });
                hs.push_back(h);
                errors.push_back(err);
                worst_residual = std::max(worst_residual, sol.residual);
                report.rows.push_back({static_cast<double>(level), h, err, sol.residual, static_cast<double>(sol.iterations)});
                break;
            }
            case StudyProblem::PlapAffine: {
                const TagRule rules[] = {tag_labels({"left", "right"}, BoundaryKind::Dirichlet),
                                         tag_labels({"top", "bottom"}, BoundaryKind::Neumann)};
                const BoundaryPartition part = tag_boundary(mesh, rules);
                const auto& a = part.vertices(Region::Dirichlet);
                const ScalarField f = ScalarField::interpolate(mesh, [](Point pt) { return pt.x; });
                double worst = 0.0, worst_stat = 0.0;
                for (double p : {2.0, 3.0, 4.0, 6.0, 10.0}) {
                    const PlapSolution sol = solve_p_laplace(PlapProblem(f, a, p));
                    for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
                        worst = std::max(worst, std::abs(sol.u[i] - mesh.vertex(i).x));
                    worst_stat = std::max(worst_stat, sol.report.stationarity);
                }
                hs.push_back(h);
                errors.push_back(worst);
                worst_residual = std::max(worst_residual, worst_stat);
                report.rows.push_back({static_cast<double>(level), h, worst, worst_stat});
                break;
            }
            case StudyProblem::IbpSmooth: {
                const TagRule rules[] = {tag_everything(BoundaryKind::Dirichlet)};
                const BoundaryPartition part = tag_boundary(mesh, rules);
                const ScalarField u = ScalarField::interpolate(mesh, [](Point pt) { return pt.x; });
                const VectorField beta = VectorField::sample(mesh, [](Point pt) { return Vec2{pt.x, 0.0}; });
                const double r = std::abs(ibp_residual(part, u, beta, ScalarField::constant(mesh, 1.0), Region::Whole));
                hs.push_back(h);
                errors.push_back(r);
                report.rows.push_back({static_cast<double>(level), h, r});
                break;
            }
        }
    }

    switch (problem) {
        case StudyProblem::ManufacturedDirichlet:
        case StudyProblem::NeumannHarmonic: {
            report.columns = {"level", "h", "l2_error", "residual", "cg_iterations"};
            report.fitted_value = fitted_rate(hs, errors);
            report.tolerance = 0.3;
            report.checks.push_back(make_check("l2_rate", report.fitted_value, 2.0,
                                               std::abs(report.fitted_value - 2.0) <= 0.3));
            report.checks.push_back(make_check("residual", worst_residual, 1e-10, worst_residual <= 1e-10));
            break;
        }
        case StudyProblem::PlapAffine: {
            report.columns = {"level", "h", "max_nodal_error", "stationarity"};
            const double worst = *std::max_element(errors.begin(), errors.end());
            // The discrete solution is exact, so there is no rate to fit; report the worst error.
            report.fitted_value = worst;
            report.tolerance = 1e-6;
            report.checks.push_back(make_check("affine_exact", worst, 1e-6, worst <= 1e-6));
            break;
        }
        case StudyProblem::IbpSmooth: {
            report.columns = {"level", "h", "residual"};
            report.fitted_value = fitted_rate(hs, errors);
            report.tolerance = 1.0;
            report.checks.push_back(make_check("residual_rate", report.fitted_value, 1.0, report.fitted_value >= 1.0 - 1e-9));
            break;
        }
    }
    return report;
}

}  // namespace sobolev
