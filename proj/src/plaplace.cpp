#include "sobolev/plaplace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "sobolev/error.hpp"
#include "sobolev/random.hpp"

namespace sobolev {

namespace {

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Per-element gradients of a nodal vector, divided by `unit`.
std::vector<Vec2> element_gradients(const Mesh& mesh, const Vector& u, double unit) {
    std::vector<Vec2> g(mesh.num_triangles());
    const double inv = 1.0 / unit;
    for (std::size_t t = 0; t < g.size(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& sg = mesh.shape_gradients(t);
        g[t] = inv * (u[ix(tri[0])] * sg[0] + u[ix(tri[1])] * sg[1] + u[ix(tri[2])] * sg[2]);
    }
    return g;
}

// The damped-Newton machinery works with gradients measured in units of `unit`,
// which keeps (|g|^2 + eps^2)^{p/2} near 1 for every p.
class RegularizedEnergy {
public:
    RegularizedEnergy(const Mesh& mesh, double p, double eps, double unit)
        : mesh_(mesh), p_(p), eps2_(eps * eps), unit_(unit) {}

    double value(const Vector& u) const {
        const auto g = element_gradients(mesh_, u, unit_);
        double acc = 0.0;
        for (std::size_t t = 0; t < g.size(); ++t) acc += mesh_.area(t) * std::pow(dot(g[t], g[t]) + eps2_, 0.5 * p_);
        return acc;
    }

    // E(u + step) - E(u) without cancellation: per element, b^k expm1(k log1p((a - b) / b))
    // with a - b = dg . (2 g + dg) taken from the step itself.
    double difference(const Vector& u, const Vector& step) const {
        const auto g = element_gradients(mesh_, u, unit_);
        const auto dg = element_gradients(mesh_, step, unit_);
        const double k = 0.5 * p_;
        double acc = 0.0;
        for (std::size_t t = 0; t < g.size(); ++t) {
            const double b = dot(g[t], g[t]) + eps2_;
            const double delta = dot(dg[t], 2.0 * g[t] + dg[t]);
            if (delta == 0.0) continue;
            if (b == 0.0) {
                acc += mesh_.area(t) * std::pow(delta, k);
                continue;
            }
            acc += mesh_.area(t) * std::pow(b, k) * std::expm1(k * std::log1p(delta / b));
        }
        return acc;
    }

    // Fills r_i = sum_T |T| w_T g_T . grad phi_i and the linearized weights.
    void linearize(const Vector& u, Linearization kind, Vector& r, std::vector<std::array<double, 3>>& weights) const {
        const auto g = element_gradients(mesh_, u, unit_);
        r.setZero(ix(mesh_.num_vertices()));
        weights.resize(g.size());
        // Floor keeps weights finite where the gradient vanishes and eps = 0.
        constexpr double kFloor = 1e-30;
        for (std::size_t t = 0; t < g.size(); ++t) {
            const double s = std::max(dot(g[t], g[t]) + eps2_, kFloor);
            const double w = std::pow(s, 0.5 * (p_ - 2.0));
            const auto& tri = mesh_.triangle(t);
            const auto& sg = mesh_.shape_gradients(t);
            for (int i = 0; i < 3; ++i) r[ix(tri[i])] += mesh_.area(t) * w * dot(g[t], sg[i]);
            if (kind == Linearization::Newton) {
                const double c = (p_ - 2.0) * w / s;
                weights[t] = {w + c * g[t].x * g[t].x, c * g[t].x * g[t].y, w + c * g[t].y * g[t].y};
            } else {
                weights[t] = {w, 0.0, w};
            }
        }
    }

private:
    const Mesh& mesh_;
    double p_;
    double eps2_;
    double unit_;
};

ScalarField to_field(const Mesh& mesh, const Vector& v) {
    return ScalarField(mesh, std::vector<double>(v.data(), v.data() + v.size()));
}

Vector gather(const Vector& v, const std::vector<std::size_t>& idx) {
    Vector out(ix(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[ix(k)] = v[ix(idx[k])];
    return out;
}

std::vector<double> exponent_schedule(double target, double factor) {
    if (target == 2.0) return {2.0};
    const int steps = static_cast<int>(std::ceil(std::abs(std::log(target / 2.0)) / std::log(factor) - 1e-12));
    std::vector<double> ps;
    for (int k = 1; k <= steps; ++k) ps.push_back(2.0 * std::pow(target / 2.0, static_cast<double>(k) / steps));
    ps.back() = target;
    return ps;
}

}  // namespace

PlapProblem::PlapProblem(ScalarField f, std::vector<std::size_t> constraint, double p, PlapOptions options)
    : f_(std::move(f)), constraint_(sorted_unique(std::move(constraint))), p_(p), options_(options) {
    if (constraint_.empty()) throw InvalidArgument("PlapProblem: constraint set A must be nonempty");
    if (constraint_.back() >= f_.mesh().num_vertices()) throw InvalidArgument("PlapProblem: constraint vertex out of range");
    if (!(p_ > 1.0) || !std::isfinite(p_)) throw InvalidArgument("PlapProblem: p must lie in (1, inf)");
    if (options_.eps_final && !(*options_.eps_final >= 0.0)) throw InvalidArgument("PlapProblem: eps must be >= 0");
    if (!(options_.tol > 0.0)) throw InvalidArgument("PlapProblem: tol must be > 0");
    if (options_.max_outer < 1) throw InvalidArgument("PlapProblem: max_outer must be >= 1");
    if (!(options_.continuation_factor > 1.0 && options_.continuation_factor <= 1.5))
        throw InvalidArgument("PlapProblem: continuation factor must lie in (1, 1.5]");
}

VectorField sharp_p(const VectorField& beta, double p) {
    if (!(p > 1.0)) throw InvalidArgument("sharp_p: p must be > 1");
    if (p == 2.0) return beta;
    const double total = lp_norm(beta, p);
    std::vector<Vec2> out(beta.size());
    if (total == 0.0) return VectorField(beta.mesh(), std::move(out));
    for (std::size_t t = 0; t < out.size(); ++t) {
        const double m = norm(beta[t]);
        out[t] = m == 0.0 ? Vec2{} : std::pow(m / total, p - 2.0) * beta[t];
    }
    return VectorField(beta.mesh(), std::move(out));
}

double p_energy(const ScalarField& u, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("p_energy: p must be >= 1");
    return lp_norm(gradient(u), p);
}

double p_stationarity(const ScalarField& u, double p, std::span<const std::size_t> constraint) {
    if (!(p > 1.0)) throw InvalidArgument("p_stationarity: p must be > 1");
    const Mesh& mesh = u.mesh();
    const VectorField g = gradient(u);
    const double energy = lp_norm(g, p);
    if (energy == 0.0) return 0.0;
    const VectorField sharp = sharp_p(g, p);

    std::vector<double> pairing(mesh.num_vertices(), 0.0), hat_pow(mesh.num_vertices(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& sg = mesh.shape_gradients(t);
        for (int i = 0; i < 3; ++i) {
            pairing[tri[i]] += mesh.area(t) * dot(sharp[t], sg[i]);
            hat_pow[tri[i]] += mesh.area(t) * std::pow(norm(sg[i]), p);
        }
    }
    const std::vector<std::size_t> fixed = sorted_unique({constraint.begin(), constraint.end()});
    double worst = 0.0;
    for (auto i : complement(mesh.num_vertices(), fixed))
        worst = std::max(worst, std::abs(pairing[i]) / std::pow(hat_pow[i], 1.0 / p));
    return worst / energy;
}

PlapSolution solve_p_laplace(const PlapProblem& problem) {
    const Mesh& mesh = problem.mesh();
    const double p = problem.p();
    const PlapOptions& opt = problem.options();
    const auto& fixed = problem.constraint();
    const auto free = complement(mesh.num_vertices(), fixed);

    Vector u = Vector::Zero(ix(mesh.num_vertices()));
    for (auto i : fixed) u[ix(i)] = problem.datum()[i];

    OptimalityReport report;
    auto finish = [&](Vector& values) {
        ScalarField field = to_field(mesh, values);
        report.energy = p_energy(field, p);
        report.stationarity = p_stationarity(field, p, fixed);
        return PlapSolution{std::move(field), std::move(report)};
    };
    if (free.empty()) return finish(u);

    // Warm start: the p = 2 problem.
    const SparseMatrix k = stiffness_matrix(mesh);
    {
        const SparseMatrix kff = submatrix(k, free, free);
        const Vector b = -(submatrix(k, free, fixed) * gather(u, fixed));
        Vector uf = Vector::Zero(ix(free.size()));
        conjugate_gradient(kff, b, uf, opt.cg_tol, static_cast<int>(20 * free.size()));
        for (std::size_t q = 0; q < free.size(); ++q) u[ix(free[q])] = uf[ix(q)];
    }
    const double scale = p_energy(to_field(mesh, u), 2.0);
    if (scale == 0.0) return finish(u);
    const double unit = scale / std::sqrt(mesh.total_area());

    if (opt.seed) {
        Rng rng(derive_seed(*opt.seed, "plap-warm-start"));
        double lo = u[ix(fixed.front())], hi = lo;
        for (auto i : fixed) {
            lo = std::min(lo, u[ix(i)]);
            hi = std::max(hi, u[ix(i)]);
        }
        const double amplitude = 1e-2 * std::max(hi - lo, scale);
        for (auto i : free) u[ix(i)] += amplitude * uniform(rng, -1.0, 1.0);
    }

    // Stage list: exponent continuation at eps_start, then eps continuation at the target p.
    const double eps_start = 1e-2;
    const double eps_final = opt.eps_final ? *opt.eps_final / unit : 1e-8;
    std::vector<std::pair<double, double>> stages;
    for (double pk : exponent_schedule(p, opt.continuation_factor)) stages.emplace_back(pk, eps_start);
    for (double e = eps_start * 0.1; e > std::max(eps_final, 1e-8) * (1.0 + 1e-12); e *= 0.1) stages.emplace_back(p, e);
    if (stages.back().second != eps_final) stages.emplace_back(p, eps_final);

    std::vector<std::array<double, 3>> weights;
    Vector r;
    Vector best = u;
    double best_stat = std::numeric_limits<double>::infinity();
    int total = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto [pk, eps] = stages[s];
        const bool last = s + 1 == stages.size();
        const RegularizedEnergy energy(mesh, pk, eps, unit);
        StageRecord record{pk, eps * unit, 0, {}};
        double value = energy.value(u);
        record.energies.push_back(value);

        for (int it = 0; it < opt.max_outer; ++it) {
            if (last) {
                const double stat = p_stationarity(to_field(mesh, u), p, fixed);
                if (stat < best_stat) {
                    best_stat = stat;
                    best = u;
                }
                if (stat <= opt.tol) break;
            }
            energy.linearize(u, opt.linearization, r, weights);
            const SparseMatrix h = submatrix(weighted_stiffness_matrix(mesh, weights), free, free);
            const Vector rf = gather(r, free);
            Vector d = Vector::Zero(ix(free.size()));
            try {
                conjugate_gradient(h, -rf, d, opt.cg_tol, static_cast<int>(20 * free.size()));
            } catch (const NumericalError&) {
                break;
            }
            // Directional derivative of the normalized energy along unit * d.
            const double slope = pk * rf.dot(d);
            if (!(slope < 0.0)) break;
            if (!last && -slope <= 1e-12 * value) break;

            Vector step = Vector::Zero(u.size());
            for (std::size_t q = 0; q < free.size(); ++q) step[ix(free[q])] = unit * d[ix(q)];
            double t = 1.0;
            double change = 0.0;
            bool accepted = false;
            while (t > 1e-12) {
                change = energy.difference(u, t * step);
                if (change <= 1e-4 * t * slope) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;  // no representable decrease left at this stage
            if (!(change < 0.0))
                throw NumericalError("solve_p_laplace: accepted step increased the energy", change, total);
            u += t * step;
            value += change;
            record.energies.push_back(value);
            ++record.iterations;
            ++total;
        }
        report.stages.push_back(std::move(record));
    }

    const double stat = p_stationarity(to_field(mesh, u), p, fixed);
    if (stat < best_stat) {
        best_stat = stat;
        best = u;
    }
    report.iterations = total;
    if (!(best_stat <= opt.tol)) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "solve_p_laplace: stationarity %.3g above tolerance %.3g", best_stat, opt.tol);
        throw PlapConvergenceError(msg,
                                   best_stat, total, std::vector<double>(best.data(), best.data() + best.size()));
    }
    return finish(best);
}

OptimalityReport minimality_certificate(const ScalarField& u, double p, std::span<const std::size_t> constraint,
                                        int trials, std::uint64_t seed, int smoothing_sweeps) {
    if (trials < 1) throw InvalidArgument("minimality_certificate: trials must be >= 1");
    const Mesh& mesh = u.mesh();
    const std::vector<std::size_t> fixed = sorted_unique({constraint.begin(), constraint.end()});
    std::vector<char> pinned(mesh.num_vertices(), 0);
    for (auto i : fixed) pinned.at(i) = 1;

    Rng rng(derive_seed(seed, "minimality-certificate"));
    std::vector<ScalarField> directions;
    directions.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> d(mesh.num_vertices(), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i)
            if (!pinned[i]) d[i] = uniform(rng, -1.0, 1.0);
        for (int sweep = 0; sweep < smoothing_sweeps; ++sweep) {
            std::vector<double> next(d.size(), 0.0);
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (pinned[i]) continue;
                double acc = d[i];
                for (auto j : mesh.neighbors(i)) acc += d[j];
                next[i] = acc / static_cast<double>(mesh.neighbors(i).size() + 1);
            }
            d = std::move(next);
        }
        directions.emplace_back(mesh, std::move(d));
    }
    return minimality_certificate(u, p, constraint, directions);
}

OptimalityReport minimality_certificate(const ScalarField& u, double p, std::span<const std::size_t> constraint,
                                        std::span<const ScalarField> directions) {
    if (!(p > 1.0)) throw InvalidArgument("minimality_certificate: p must be > 1");
    if (directions.empty()) throw InvalidArgument("minimality_certificate: need at least one direction");
    for (const auto& d : directions) {
        if (d.mesh().fingerprint() != u.mesh().fingerprint())
            throw InvalidArgument("minimality_certificate: direction lives on another mesh");
        for (auto i : constraint)
            if (d[i] != 0.0) throw InvalidArgument("minimality_certificate: direction must vanish on A");
    }

    OptimalityReport report;
    report.energy = p_energy(u, p);
    report.stationarity = p_stationarity(u, p, constraint);
    const double scale = report.energy > 0.0 ? report.energy : 1.0;
    constexpr double kSteps[] = {1e-3, -1e-3, 1e-2, -1e-2};

    CertificateOutcome outcome;
    outcome.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& d : directions) {
        const double dn = p_energy(d, p);
        const ScalarField unit_d = dn > 0.0 ? (1.0 / dn) * d : d;
        bool violated = false;
        for (double step : kSteps) {
            const double margin = p_energy(u + (step * scale) * unit_d, p) - report.energy;
            outcome.worst_margin = std::min(outcome.worst_margin, margin);
            if (margin < -1e-10 * scale) violated = true;
        }
        ++outcome.trials;
        if (violated) ++outcome.violations;
    }
    outcome.passed = outcome.violations == 0;
    report.certificate = outcome;
    return report;
}

}  // namespace sobolev
