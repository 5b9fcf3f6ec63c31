#include "sobolev/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "sobolev/error.hpp"
#include "sobolev/laplace.hpp"
#include "sobolev/plaplace.hpp"
#include "sobolev/random.hpp"
#include "sobolev/verify.hpp"

namespace sobolev::cli {

namespace {

constexpr double kPi = std::numbers::pi;

const std::set<std::string> kCommands = {"mesh", "solve-laplace", "solve-neumann", "solve-plap", "verify", "sweep"};
const std::set<std::string> kExperiments = {"counterexample_punctured", "manufactured_dirichlet", "neumann_harmonic",
                                            "plap_affine", "ibp_smooth", "poincare", "poincare_p", "holder"};

struct Analytic {
    double (*value)(Point);
    Vec2 (*grad)(Point);
};

const std::map<std::string, Analytic>& analytic_functions() {
    static const std::map<std::string, Analytic> table = {
        {"zero", {[](Point) { return 0.0; }, [](Point) { return Vec2{}; }}},
        {"one", {[](Point) { return 1.0; }, [](Point) { return Vec2{}; }}},
        {"x", {[](Point q) { return q.x; }, [](Point) { return Vec2{1.0, 0.0}; }}},
        {"y", {[](Point q) { return q.y; }, [](Point) { return Vec2{0.0, 1.0}; }}},
        {"x2_minus_y2", {[](Point q) { return q.x * q.x - q.y * q.y; }, [](Point q) { return Vec2{2 * q.x, -2 * q.y}; }}},
        {"sin_sin",
         {[](Point q) { return std::sin(kPi * q.x) * std::sin(kPi * q.y); },
          [](Point q) {
              return Vec2{kPi * std::cos(kPi * q.x) * std::sin(kPi * q.y), kPi * std::sin(kPi * q.x) * std::cos(kPi * q.y)};
          }}},
        {"laplacian_sin_sin",
         {[](Point q) { return -2.0 * kPi * kPi * std::sin(kPi * q.x) * std::sin(kPi * q.y); },
          [](Point q) {
              const double c = -2.0 * kPi * kPi * kPi;
              return Vec2{c * std::cos(kPi * q.x) * std::sin(kPi * q.y), c * std::sin(kPi * q.x) * std::cos(kPi * q.y)};
          }}},
        {"r", {[](Point q) { return norm(q); }, [](Point q) { return norm(q) > 0 ? (1.0 / norm(q)) * q : Vec2{}; }}},
        {"sqrt_r",
         {[](Point q) { return std::sqrt(norm(q)); },
          [](Point q) { return norm(q) > 0 ? (0.5 * std::pow(norm(q), -1.5)) * q : Vec2{}; }}},
    };
    return table;
}

// Logging ----------------------------------------------------------------------------

bool use_color() { return std::getenv("NO_COLOR") == nullptr && isatty(STDERR_FILENO); }

void log_line(std::string_view level, const std::string& message) {
    if (use_color()) {
        const char* color = level == "warning" ? "\033[33m" : "\033[36m";
        std::cerr << color << '[' << level << "]\033[0m " << message << '\n';
    } else {
        std::cerr << '[' << level << "] " << message << '\n';
    }
}

void emit_error(Json record, const std::filesystem::path* out_dir) {
    std::cerr << record.dump() << '\n';
    if (out_dir && std::filesystem::is_directory(*out_dir)) {
        try {
            write_text_file(*out_dir / "error.json", record.dump(2) + "\n");
        } catch (const std::exception&) {
        }
    }
}

// Schema helpers ----------------------------------------------------------------------

void warn_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& prefix,
                  std::vector<std::string>& warnings) {
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            warnings.push_back("unknown key '" + prefix + key + "' ignored");
    }
}

double get_number(const Json& j, const char* key, const std::string& path) {
    if (!j.at(key).is_number()) throw ConfigError(path, "expected a number");
    return j.at(key).get<double>();
}

long long get_integer(const Json& j, const char* key, const std::string& path, long long lo) {
    const Json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo) throw ConfigError(path, "must be >= " + std::to_string(lo));
    return x;
}

void validate_scalar_spec(const Json& spec, const std::string& path) {
    if (spec.is_number()) {
        if (!std::isfinite(spec.get<double>())) throw ConfigError(path, "constant must be finite");
        return;
    }
    if (spec.is_string()) {
        if (!analytic_functions().count(spec.get<std::string>()))
            throw ConfigError(path, "unknown function '" + spec.get<std::string>() + "'");
        return;
    }
    if (spec.is_object() && spec.contains("file") && spec["file"].is_string()) {
        if (!std::filesystem::exists(spec["file"].get<std::string>()))
            throw ConfigError(path + ".file", "file does not exist: " + spec["file"].get<std::string>());
        return;
    }
    throw ConfigError(path, "expected a number, a function name, or {\"file\": path}");
}

void validate_flux_spec(const Json& spec, const std::string& path) {
    if (spec.is_number()) return;
    if (spec.is_string()) {
        const std::string s = spec.get<std::string>();
        if (s == "zero") return;
        if (s.rfind("flux:", 0) == 0 && analytic_functions().count(s.substr(5))) return;
    }
    throw ConfigError(path, "expected a number, \"zero\" or \"flux:<function>\"");
}

ScalarField resolve_scalar(const Json& spec, const Mesh& mesh) {
    if (spec.is_number()) return ScalarField::constant(mesh, spec.get<double>());
    if (spec.is_string()) return ScalarField::interpolate(mesh, analytic_functions().at(spec.get<std::string>()).value);
    return field_from_json(mesh, Json::parse(read_text_file(spec["file"].get<std::string>())));
}

BoundaryTrace resolve_flux(const Json& spec, const Mesh& mesh, const BoundaryPartition& part, Region region) {
    if (spec.is_number()) return BoundaryTrace::edge_constant(mesh, part, region, spec.get<double>());
    const std::string s = spec.get<std::string>();
    if (s == "zero") return BoundaryTrace::edge_constant(mesh, part, region, 0.0);
    const auto grad = analytic_functions().at(s.substr(5)).grad;
    return BoundaryTrace::edge_function(mesh, part, region, [grad](Point m, Vec2 nu) { return dot(grad(m), nu); });
}

const std::map<std::string, DomainSpec::Kind> kDomainKinds = {{"unit_square", DomainSpec::Kind::UnitSquare},
                                                              {"rectangle", DomainSpec::Kind::Rectangle},
                                                              {"annulus", DomainSpec::Kind::Annulus},
                                                              {"cusp", DomainSpec::Kind::Cusp}};

void parse_domain(const Json& d, RunConfig& cfg) {
    if (!d.is_object()) throw ConfigError("domain", "expected an object");
    warn_unknown(d, {"kind", "n", "width", "height", "r_in", "r_out", "n_radial", "n_angular", "k", "grading_ratio", "refine"},
                 "domain.", cfg.warnings);
    if (d.contains("kind")) {
        if (!d["kind"].is_string() || !kDomainKinds.count(d["kind"].get<std::string>()))
            throw ConfigError("domain.kind", "expected one of unit_square, rectangle, annulus, cusp");
        cfg.domain_kind = d["kind"].get<std::string>();
    }
    DomainSpec& s = cfg.domain;
    s.kind = kDomainKinds.at(cfg.domain_kind);
    if (d.contains("n")) s.n = static_cast<std::size_t>(get_integer(d, "n", "domain.n", 1));
    if (d.contains("n_radial")) s.n_radial = static_cast<std::size_t>(get_integer(d, "n_radial", "domain.n_radial", 1));
    if (d.contains("n_angular")) s.n_angular = static_cast<std::size_t>(get_integer(d, "n_angular", "domain.n_angular", 3));
    if (d.contains("refine")) cfg.refine = static_cast<int>(get_integer(d, "refine", "domain.refine", 0));
    auto positive = [&](const char* key, double& target) {
        if (!d.contains(key)) return;
        target = get_number(d, key, std::string("domain.") + key);
        if (!(target > 0.0)) throw ConfigError(std::string("domain.") + key, "must be > 0");
    };
    positive("width", s.width);
    positive("height", s.height);
    positive("r_in", s.r_in);
    positive("r_out", s.r_out);
    positive("k", s.k);
    positive("grading_ratio", s.grading_ratio);
    if (s.kind == DomainSpec::Kind::Annulus && !(s.r_in < s.r_out)) throw ConfigError("domain.r_in", "must be < r_out");
    if (s.kind == DomainSpec::Kind::Cusp && !(s.k >= 1.0)) throw ConfigError("domain.k", "cusp exponent must be >= 1");
    if (s.kind == DomainSpec::Kind::Cusp && !(s.grading_ratio < 1.0))
        throw ConfigError("domain.grading_ratio", "must lie in (0, 1)");
}

Mesh build_mesh(const RunConfig& cfg) {
    Mesh mesh = build_domain(cfg.domain);
    for (int r = 0; r < cfg.refine; ++r) mesh = refine(mesh);
    return mesh;
}

BoundaryPartition make_partition(const Mesh& mesh, const RunConfig& cfg, BoundaryKind fallback) {
    if (!cfg.dirichlet_labels) {
        const TagRule rules[] = {tag_everything(fallback)};
        return tag_boundary(mesh, rules, cfg.constraint_vertices);
    }
    const auto& labels = *cfg.dirichlet_labels;
    std::set<std::string> present;
    for (const auto& e : mesh.boundary_edges()) present.insert(e.label);
    for (const auto& l : labels)
        if (!present.count(l)) throw ConfigError("partition.dirichlet", "no boundary edge carries the label '" + l + "'");
    const std::set<std::string> chosen(labels.begin(), labels.end());
    const TagRule rules[] = {tag_labels(labels, BoundaryKind::Dirichlet),
                             TagRule{"others", [chosen](const EdgeView& e) { return !chosen.count(std::string(e.label)); },
                                     BoundaryKind::Neumann}};
    return tag_boundary(mesh, rules, cfg.constraint_vertices);
}

std::vector<std::size_t> constraint_set(const BoundaryPartition& part, const RunConfig& cfg, const Mesh& mesh) {
    std::vector<std::size_t> a = part.vertices(Region::Dirichlet);
    for (auto v : cfg.constraint_vertices) {
        if (v >= mesh.num_vertices()) throw ConfigError("constraint_vertices", "vertex index out of range");
        a.push_back(v);
    }
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    if (a.empty()) throw ConfigError("partition.dirichlet", "constraint set A is empty");
    return a;
}

// Artifacts -------------------------------------------------------------------------------

class ArtifactConflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Artifacts {
public:
    explicit Artifacts(const RunConfig& cfg) : dir_(cfg.out), hash_(cfg.hash()), force_(cfg.force) {}

    const std::string& hash() const { return hash_; }

    void write_json(const std::string& name, Json j) const {
        j["config_hash"] = hash_;
        write(name, j.dump(2) + "\n");
    }
    void write_raw(const std::string& name, const std::string& text) const { write(name, text); }

private:
    void write(const std::string& name, const std::string& text) const {
        const auto path = dir_ / name;
        const auto existing = artifact_hash(path);
        if (std::filesystem::exists(path) && existing != hash_ && !force_)
            throw ArtifactConflict(path.string() + " was produced by a different configuration (hash " +
                                   existing.value_or("none") + "); rerun with --force to overwrite");
        write_text_file(path, text);
        log_line("info", "wrote " + path.string());
    }

    std::filesystem::path dir_;
    std::string hash_;
    bool force_;
};

Json certificate_json(const std::optional<CertificateOutcome>& c) {
    if (!c) return nullptr;
    return {{"passed", c->passed}, {"worst_margin", c->worst_margin}, {"trials", c->trials}, {"violations", c->violations}};
}

// Commands ---------------------------------------------------------------------------------

int cmd_mesh(const RunConfig& cfg, const Artifacts& art) {
    const Mesh mesh = build_mesh(cfg);
    art.write_json("mesh.json", mesh_to_json(mesh));
    return kExitOk;
}

int cmd_solve_laplace(const RunConfig& cfg, const Artifacts& art) {
    const Mesh mesh = build_mesh(cfg);
    const BoundaryPartition part = make_partition(mesh, cfg, BoundaryKind::Dirichlet);
    std::optional<BoundaryTrace> theta;
    if (!part.edges(Region::Neumann).empty()) theta = resolve_flux(cfg.theta, mesh, part, Region::Neumann);
    const MixedProblem problem(part, resolve_scalar(cfg.g, mesh), resolve_scalar(cfg.f, mesh), theta);
    LinearSolveOptions opts;
    opts.tol = std::min(1e-12, cfg.tol);
    const LaplaceSolution sol = solve_mixed(problem, opts);
    art.write_json("solution.json", field_to_json(sol.u));
    art.write_json("report.json", {{"residual", sol.residual}, {"iterations", sol.iterations}, {"defect", sol.defect}});
    return kExitOk;
}

int cmd_solve_neumann(const RunConfig& cfg, const Artifacts& art) {
    const Mesh mesh = build_mesh(cfg);
    const TagRule rules[] = {tag_everything(BoundaryKind::Neumann)};
    const BoundaryPartition part = tag_boundary(mesh, rules);
    const NeumannProblem problem(resolve_scalar(cfg.g, mesh), resolve_flux(cfg.theta, mesh, part, Region::Whole));
    LinearSolveOptions opts;
    opts.tol = std::min(1e-12, cfg.tol);
    const LaplaceSolution sol = solve_neumann(problem, opts);
    art.write_json("solution.json", field_to_json(sol.u));
    art.write_json("report.json", {{"residual", sol.residual}, {"iterations", sol.iterations}, {"defect", sol.defect}});
    return kExitOk;
}

PlapOptions plap_options(const RunConfig& cfg) {
    PlapOptions o;
    o.tol = cfg.tol;
    o.max_outer = cfg.max_outer;
    o.eps_final = cfg.eps_final;
    return o;
}

int cmd_solve_plap(const RunConfig& cfg, const Artifacts& art) {
    const Mesh mesh = build_mesh(cfg);
    const BoundaryPartition part = make_partition(mesh, cfg, BoundaryKind::Dirichlet);
    const auto a = constraint_set(part, cfg, mesh);
    const double p = cfg.p.value_or(2.0);
    const PlapSolution sol = solve_p_laplace(PlapProblem(resolve_scalar(cfg.f, mesh), a, p, plap_options(cfg)));
    std::optional<CertificateOutcome> cert;
    if (cfg.trials > 0)
        cert = minimality_certificate(sol.u, p, a, cfg.trials, derive_seed(cfg.seed, "solve-plap-certificate")).certificate;
    art.write_json("solution.json", field_to_json(sol.u));
    art.write_json("report.json", {{"p", p},
                                   {"energy", sol.report.energy},
                                   {"stationarity", sol.report.stationarity},
                                   {"iterations", sol.report.iterations},
                                   {"certificate", certificate_json(cert)}});
    if (cert && !cert->passed) {
        log_line("warning", "minimality certificate reported violations");
        return kExitNumerical;
    }
    return kExitOk;
}

template <typename T>
T verify_param(const RunConfig& cfg, const char* key, T fallback) {
    if (!cfg.verify.contains(key)) return fallback;
    try {
        return cfg.verify.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("verify.") + key, "wrong type");
    }
}

Report poincare_report(const RunConfig& cfg) {
    const int levels = verify_param<int>(cfg, "levels", 1);
    if (levels < 1) throw ConfigError("verify.levels", "must be >= 1");
    const std::string mode = verify_param<std::string>(cfg, "mode", "wirtinger");
    if (mode != "wirtinger" && mode != "trace") throw ConfigError("verify.mode", "expected wirtinger or trace");
    Report r;
    r.experiment = "poincare";
    r.parameters = {{"mode", mode}, {"domain", cfg.domain_kind}};
    r.columns = {"level", "h", "constant", "eigenvalue", "iterations"};
    Mesh mesh = build_mesh(cfg);
    double previous = 0.0;
    bool monotone = true;
    for (int level = 0; level < levels; ++level) {
        if (level > 0) mesh = refine(mesh);
        EigenEstimate e;
        if (mode == "wirtinger") {
            e = poincare_constant_2(mesh);
        } else {
            const BoundaryPartition part = make_partition(mesh, cfg, BoundaryKind::Dirichlet);
            e = poincare_constant_2(part, mesh, Region::Dirichlet);
        }
        monotone = monotone && e.constant >= previous;
        previous = e.constant;
        r.rows.push_back({double(level), mesh.max_edge_length(), e.constant, e.eigenvalue, double(e.iterations)});
    }
    r.fitted_value = previous;
    r.checks.push_back({"nested_monotone", monotone ? 1.0 : 0.0, 1.0, monotone});
    if (cfg.verify.contains("expected")) {
        const double expected = verify_param<double>(cfg, "expected", 0.0);
        const double rel = std::abs(previous - expected) / expected;
        r.tolerance = 0.05;
        r.checks.push_back({"expected_within_5pct", rel, 0.05, rel <= 0.05});
    }
    return r;
}

Report poincare_p_report(const RunConfig& cfg) {
    const double p = cfg.p.value_or(2.0);
    if (!(p > 1.0)) throw ConfigError("p", "must be > 1");
    const int runs = verify_param<int>(cfg, "runs", 3);
    if (runs < 1) throw ConfigError("verify.runs", "must be >= 1");
    const Mesh mesh = build_mesh(cfg);
    const PoincareBound b = poincare_lower_bound_p(mesh, p, runs, derive_seed(cfg.seed, "verify-poincare-p"));
    Report r;
    r.experiment = "poincare_p";
    r.parameters = {{"p", format_double(p)}, {"runs", std::to_string(runs)}};
    r.columns = {"level", "h", "run", "initial_quotient", "final_quotient"};
    bool ascent = true;
    for (int k = 0; k < runs; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        r.rows.push_back({0.0, mesh.max_edge_length(), double(k), b.initial_quotients[kk], b.final_quotients[kk]});
        ascent = ascent && b.final_quotients[kk] >= b.initial_quotients[kk];
    }
    r.fitted_value = b.value;
    r.checks.push_back({"ascent_monotone", ascent ? 1.0 : 0.0, 1.0, ascent});
    return r;
}

Report holder_report(const RunConfig& cfg) {
    const Mesh mesh = build_mesh(cfg);
    const ScalarField u = resolve_scalar(cfg.f, mesh);
    const HolderEstimate est = holder_exponent(u, cfg.n_pairs, derive_seed(cfg.seed, "verify-holder"));
    Report r;
    r.experiment = "holder";
    r.parameters = {{"n_pairs", std::to_string(cfg.n_pairs)}};
    r.columns = {"level", "h", "alpha", "fit_quality", "pairs"};
    const double alpha = est.alpha.value_or(std::numeric_limits<double>::quiet_NaN());
    r.rows.push_back({0.0, mesh.max_edge_length(), alpha, est.fit_quality, double(est.pairs)});
    r.fitted_value = alpha;
    r.checks.push_back({"exponent_defined", est.alpha ? 1.0 : 0.0, 1.0, est.alpha.has_value()});
    return r;
}

int cmd_verify(const RunConfig& cfg, const Artifacts& art) {
    Report report;
    const std::string& ex = cfg.experiment;
    if (ex == "counterexample_punctured") {
        const double p = cfg.p.value_or(3.0);
        if (!(p > 2.0)) throw ConfigError("p", "counterexample_punctured needs p > 2 (p_M(A) = 2 for the puncture)");
        const auto r_in = verify_param<std::vector<double>>(cfg, "r_in", {1e-2, 1e-3});
        const int levels = verify_param<int>(cfg, "levels", 3);
        report = counterexample_punctured(p, r_in, levels);
    } else if (ex == "poincare") {
        report = poincare_report(cfg);
    } else if (ex == "poincare_p") {
        report = poincare_p_report(cfg);
    } else if (ex == "holder") {
        report = holder_report(cfg);
    } else {
        const int levels = verify_param<int>(cfg, "levels", 4);
        if (levels < 3) throw ConfigError("verify.levels", "convergence studies need >= 3 levels");
        report = convergence_study(parse_study_problem(ex), levels);
    }
    art.write_raw(ex + ".csv", report_csv(report, art.hash()));
    art.write_json(ex + ".json", report_summary(report));
    if (!report.pass()) {
        emit_error({{"error", "acceptance"}, {"experiment", ex}, {"message", "one or more checks failed"}}, nullptr);
        return kExitNumerical;
    }
    return kExitOk;
}

struct SweepCell {
    double p = 0.0;
    int level = 0;
    double h = 0.0;
    double energy = std::numeric_limits<double>::quiet_NaN();
    double stationarity = std::numeric_limits<double>::quiet_NaN();
    double iterations = 0.0;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double fit_quality = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
};

int cmd_sweep(const RunConfig& cfg, const Artifacts& art) {
    std::vector<int> levels = cfg.levels;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<double> ps = cfg.p_list;
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

    std::vector<Mesh> meshes;
    meshes.push_back(build_mesh(cfg));
    while (static_cast<int>(meshes.size()) <= levels.back()) meshes.push_back(refine(meshes.back()));

    std::vector<SweepCell> cells;
    for (double p : ps)
        for (int level : levels) {
            SweepCell cell;
            cell.p = p;
            cell.level = level;
            cell.h = meshes[static_cast<std::size_t>(level)].max_edge_length();
            cells.push_back(cell);
        }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            SweepCell& cell = cells[c];
            const Mesh& mesh = meshes[static_cast<std::size_t>(cell.level)];
            try {
                const BoundaryPartition part = make_partition(mesh, cfg, BoundaryKind::Dirichlet);
                const auto a = constraint_set(part, cfg, mesh);
                const PlapSolution sol = solve_p_laplace(PlapProblem(resolve_scalar(cfg.f, mesh), a, cell.p, plap_options(cfg)));
                cell.energy = sol.report.energy;
                cell.stationarity = sol.report.stationarity;
                cell.iterations = sol.report.iterations;
                const std::string label = "sweep-p" + format_double(cell.p) + "-level" + std::to_string(cell.level);
                const HolderEstimate est = holder_exponent(sol.u, cfg.n_pairs, derive_seed(cfg.seed, label));
                if (est.alpha) {
                    cell.alpha = *est.alpha;
                    cell.fit_quality = est.fit_quality;
                }
                cell.ok = true;
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(cells.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    failure = std::current_exception();
                    next = cells.size();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    Report r;
    r.experiment = "sweep";
    r.columns = {"p", "level", "h", "energy", "stationarity", "iterations", "alpha", "fit_quality", "ok"};
    bool all_ok = true;
    for (const auto& c : cells) {
        r.rows.push_back({c.p, double(c.level), c.h, c.energy, c.stationarity, c.iterations, c.alpha, c.fit_quality,
                          c.ok ? 1.0 : 0.0});
        if (!c.ok) {
            all_ok = false;
            emit_error({{"error", "numerical"}, {"p", c.p}, {"level", c.level}, {"message", c.error}}, nullptr);
        }
    }
    art.write_raw("sweep.csv", report_csv(r, art.hash()));
    return all_ok ? kExitOk : kExitNumerical;
}

}  // namespace

// Config -------------------------------------------------------------------------------------

Json RunConfig::canonical() const {
    Json j;
    j["command"] = command;
    j["experiment"] = experiment;
    j["domain"] = {{"kind", domain_kind},       {"n", domain.n},
                   {"width", domain.width},     {"height", domain.height},
                   {"r_in", domain.r_in},       {"r_out", domain.r_out},
                   {"n_radial", domain.n_radial}, {"n_angular", domain.n_angular},
                   {"k", domain.k},             {"grading_ratio", domain.grading_ratio},
                   {"refine", refine}};
    j["partition"] = dirichlet_labels ? Json(*dirichlet_labels) : Json(nullptr);
    j["constraint_vertices"] = constraint_vertices;
    j["data"] = {{"g", g}, {"f", f}, {"theta", theta}};
    j["p"] = p ? Json(*p) : Json(nullptr);
    j["eps_final"] = eps_final ? Json(*eps_final) : Json(nullptr);
    j["tol"] = tol;
    j["max_outer"] = max_outer;
    j["trials"] = trials;
    j["sweep"] = {{"p", p_list}, {"levels", levels}, {"n_pairs", n_pairs}};
    j["verify"] = verify;
    j["seed"] = seed;
    return j;
}

std::string RunConfig::hash() const { return hex_digest(fnv1a(canonical().dump())); }

RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    RunConfig cfg;
    warn_unknown(j,
                 {"command", "experiment", "domain", "partition", "constraint_vertices", "data", "p", "eps_final", "tol",
                  "max_outer", "trials", "sweep", "verify", "out", "seed", "threads", "force"},
                 "", cfg.warnings);

    if (!j.contains("command") || !j["command"].is_string()) throw ConfigError("command", "required string");
    cfg.command = j["command"].get<std::string>();
    if (!kCommands.count(cfg.command)) throw ConfigError("command", "unknown command '" + cfg.command + "'");
    if (cfg.command == "verify") {
        if (!j.contains("experiment") || !j["experiment"].is_string())
            throw ConfigError("experiment", "verify needs an experiment name");
        cfg.experiment = j["experiment"].get<std::string>();
        if (!kExperiments.count(cfg.experiment))
            throw ConfigError("experiment", "unknown experiment '" + cfg.experiment + "'");
    }

    if (j.contains("domain")) parse_domain(j["domain"], cfg);
    if (j.contains("partition")) {
        const Json& pj = j["partition"];
        if (!pj.is_object()) throw ConfigError("partition", "expected an object");
        warn_unknown(pj, {"dirichlet"}, "partition.", cfg.warnings);
        if (pj.contains("dirichlet")) {
            if (!pj["dirichlet"].is_array()) throw ConfigError("partition.dirichlet", "expected a list of edge labels");
            std::vector<std::string> labels;
            for (const auto& l : pj["dirichlet"]) {
                if (!l.is_string()) throw ConfigError("partition.dirichlet", "labels must be strings");
                labels.push_back(l.get<std::string>());
            }
            cfg.dirichlet_labels = std::move(labels);
        }
    }
    if (j.contains("constraint_vertices")) {
        try {
            cfg.constraint_vertices = j["constraint_vertices"].get<std::vector<std::size_t>>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("constraint_vertices", "expected a list of vertex indices");
        }
    }
    if (j.contains("data")) {
        const Json& dj = j["data"];
        if (!dj.is_object()) throw ConfigError("data", "expected an object");
        warn_unknown(dj, {"g", "f", "theta"}, "data.", cfg.warnings);
        if (dj.contains("g")) {
            validate_scalar_spec(dj["g"], "data.g");
            cfg.g = dj["g"];
        }
        if (dj.contains("f")) {
            validate_scalar_spec(dj["f"], "data.f");
            cfg.f = dj["f"];
        }
        if (dj.contains("theta")) {
            validate_flux_spec(dj["theta"], "data.theta");
            cfg.theta = dj["theta"];
        }
    }

    if (j.contains("p") && !j["p"].is_null()) {
        const double p = get_number(j, "p", "p");
        if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("p", "must satisfy 1 < p < inf");
        cfg.p = p;
    }
    if (j.contains("eps_final") && !j["eps_final"].is_null()) {
        const double e = get_number(j, "eps_final", "eps_final");
        if (!(e >= 0.0)) throw ConfigError("eps_final", "must be >= 0");
        cfg.eps_final = e;
    }
    if (j.contains("tol")) {
        cfg.tol = get_number(j, "tol", "tol");
        if (!(cfg.tol > 0.0)) throw ConfigError("tol", "must be > 0");
    }
    if (j.contains("max_outer")) cfg.max_outer = static_cast<int>(get_integer(j, "max_outer", "max_outer", 1));
    if (j.contains("trials")) cfg.trials = static_cast<int>(get_integer(j, "trials", "trials", 0));

    if (j.contains("sweep")) {
        const Json& sj = j["sweep"];
        if (!sj.is_object()) throw ConfigError("sweep", "expected an object");
        warn_unknown(sj, {"p", "levels", "n_pairs"}, "sweep.", cfg.warnings);
        if (sj.contains("p")) {
            if (!sj["p"].is_array()) throw ConfigError("sweep.p", "expected a list of exponents");
            for (const auto& v : sj["p"]) {
                if (!v.is_number() || !(v.get<double>() > 1.0) || !std::isfinite(v.get<double>()))
                    throw ConfigError("sweep.p", "every exponent must satisfy 1 < p < inf");
                cfg.p_list.push_back(v.get<double>());
            }
        }
        if (sj.contains("levels")) {
            if (!sj["levels"].is_array()) throw ConfigError("sweep.levels", "expected a list of levels");
            for (const auto& v : sj["levels"]) {
                if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > 8)
                    throw ConfigError("sweep.levels", "levels must be integers in [0, 8]");
                cfg.levels.push_back(v.get<int>());
            }
        }
        if (sj.contains("n_pairs")) cfg.n_pairs = static_cast<std::size_t>(get_integer(sj, "n_pairs", "sweep.n_pairs", 1));
    }
    if (cfg.command == "sweep") {
        if (cfg.p_list.empty()) throw ConfigError("sweep.p", "sweep needs a nonempty p list");
        if (cfg.levels.empty()) cfg.levels = {0, 1, 2};
    }
    if (j.contains("verify")) {
        if (!j["verify"].is_object()) throw ConfigError("verify", "expected an object");
        cfg.verify = j["verify"];
    }

    if (j.contains("out")) {
        if (!j["out"].is_string() || j["out"].get<std::string>().empty()) throw ConfigError("out", "expected a directory path");
        cfg.out = j["out"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            throw ConfigError("seed", "expected an unsigned 64-bit integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("threads")) cfg.threads = static_cast<int>(get_integer(j, "threads", "threads", 1));
    if (j.contains("force")) {
        if (!j["force"].is_boolean()) throw ConfigError("force", "expected a boolean");
        cfg.force = j["force"].get<bool>();
    }
    return cfg;
}

RunConfig parse_config(const std::vector<std::string>& args) {
    CLI::App app{"Sobolev-space finite element experiments", "sobolev"};
    std::string command, experiment, config_path, out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads, max_outer;
    std::optional<double> p, eps_final, tol;
    bool force = false;
    app.add_option("command", command, "mesh | solve-laplace | solve-neumann | solve-plap | verify | sweep");
    app.add_option("experiment", experiment, "experiment name for verify");
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out, "output directory");
    app.add_option("--seed", seed, "run seed (unsigned 64-bit)");
    app.add_option("--threads", threads, "worker threads for sweep");
    app.add_option("--p", p, "exponent p");
    app.add_option("--eps-final", eps_final, "final regularization");
    app.add_option("--tol", tol, "stationarity tolerance");
    app.add_option("--max-outer", max_outer, "damped steps per continuation stage");
    app.add_flag("--force", force, "overwrite artifacts produced by another configuration");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        RunConfig help;
        help.command = "help";
        return help;
    } catch (const CLI::ParseError& e) {
        throw ConfigError("<flags>", e.what());
    }

    Json j = Json::object();
    if (!config_path.empty()) {
        if (!std::filesystem::exists(config_path)) throw ConfigError("--config", "file does not exist: " + config_path);
        j = Json::parse(read_text_file(config_path), nullptr, false);
        if (j.is_discarded()) throw ConfigError("--config", "not valid JSON: " + config_path);
        if (!j.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    }
    if (!command.empty()) j["command"] = command;
    if (!experiment.empty()) j["experiment"] = experiment;
    if (!out.empty()) j["out"] = out;
    if (seed) j["seed"] = *seed;
    if (threads) j["threads"] = *threads;
    if (p) j["p"] = *p;
    if (eps_final) j["eps_final"] = *eps_final;
    if (tol) j["tol"] = *tol;
    if (max_outer) j["max_outer"] = *max_outer;
    if (force) j["force"] = true;
    return config_from_json(j);
}

int run(const RunConfig& cfg) {
    if (cfg.command == "help") return kExitOk;
    for (const auto& w : cfg.warnings) log_line("warning", w);
    try {
        std::error_code ec;
        std::filesystem::create_directories(cfg.out, ec);
        if (ec || !std::filesystem::is_directory(cfg.out))
            throw ConfigError("out", "cannot create output directory " + cfg.out.string());
        const Artifacts art(cfg);
        log_line("info", cfg.command + (cfg.experiment.empty() ? "" : " " + cfg.experiment) + " (config " + art.hash() + ")");
        if (cfg.command == "mesh") return cmd_mesh(cfg, art);
        if (cfg.command == "solve-laplace") return cmd_solve_laplace(cfg, art);
        if (cfg.command == "solve-neumann") return cmd_solve_neumann(cfg, art);
        if (cfg.command == "solve-plap") return cmd_solve_plap(cfg, art);
        if (cfg.command == "verify") return cmd_verify(cfg, art);
        if (cfg.command == "sweep") return cmd_sweep(cfg, art);
        throw ConfigError("command", "unknown command '" + cfg.command + "'");
    } catch (const ConfigError& e) {
        emit_error({{"error", "config"}, {"field", e.field()}, {"message", e.what()}}, &cfg.out);
        return kExitConfig;
    } catch (const ArtifactConflict& e) {
        emit_error({{"error", "artifact_conflict"}, {"message", e.what()}}, nullptr);
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        emit_error({{"error", "config"}, {"message", e.what()}}, &cfg.out);
        return kExitConfig;
    } catch (const CompatibilityError& e) {
        emit_error({{"error", "compatibility"},
                    {"message", e.what()},
                    {"defect", e.defect()},
                    {"tolerance", e.tolerance()}},
                   &cfg.out);
        return kExitNumerical;
    } catch (const NumericalError& e) {
        emit_error({{"error", "numerical"}, {"message", e.what()}, {"residual", e.residual()}, {"iterations", e.iterations()}},
                   &cfg.out);
        return kExitNumerical;
    } catch (const std::exception& e) {
        emit_error({{"error", "numerical"}, {"message", e.what()}}, &cfg.out);
        return kExitNumerical;
    }
}

int main_entry(const std::vector<std::string>& args) {
    RunConfig cfg;
    try {
        cfg = parse_config(args);
    } catch (const ConfigError& e) {
        emit_error({{"error", "config"}, {"field", e.field()}, {"message", e.what()}}, nullptr);
        return kExitConfig;
    } catch (const std::exception& e) {
        emit_error({{"error", "config"}, {"message", e.what()}}, nullptr);
        return kExitConfig;
    }
    return run(cfg);
}

}  // namespace sobolev::cli
