#include "sobolev/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sobolev/error.hpp"

namespace sobolev {

namespace {

BoundaryTrace zero_flux(const BoundaryPartition& partition, const Mesh& mesh) {
    return BoundaryTrace::edge_constant(mesh, partition, Region::Neumann, 0.0);
}

// Solves the rows `free` of K u = rhs with u fixed elsewhere to `u`'s current values.
int solve_reduced(const SparseMatrix& k, const Vector& rhs, const std::vector<std::size_t>& free,
                  const std::vector<std::size_t>& fixed, Vector& u, const LinearSolveOptions& options) {
    const SparseMatrix kff = submatrix(k, free, free);
    const SparseMatrix kfd = submatrix(k, free, fixed);
    Vector ud(static_cast<Eigen::Index>(fixed.size()));
    for (std::size_t j = 0; j < fixed.size(); ++j) ud[static_cast<Eigen::Index>(j)] = u[static_cast<Eigen::Index>(fixed[j])];
    Vector b(static_cast<Eigen::Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) b[static_cast<Eigen::Index>(i)] = rhs[static_cast<Eigen::Index>(free[i])];
    if (!fixed.empty()) b -= kfd * ud;

    Vector uf = Vector::Zero(static_cast<Eigen::Index>(free.size()));
    if (options.initial_guess) {
        if (options.initial_guess->size() != static_cast<std::size_t>(u.size()))
            throw InvalidArgument("initial guess must have one value per vertex");
        for (std::size_t i = 0; i < free.size(); ++i) uf[static_cast<Eigen::Index>(i)] = (*options.initial_guess)[free[i]];
    }
    const int cap = options.max_iterations.value_or(static_cast<int>(20 * std::max<std::size_t>(free.size(), 1)));
    const CgResult cg = conjugate_gradient(kff, b, uf, options.tol, cap);
    for (std::size_t i = 0; i < free.size(); ++i) u[static_cast<Eigen::Index>(free[i])] = uf[static_cast<Eigen::Index>(i)];
    return cg.iterations;
}

Vector right_hand_side(const Mesh& mesh, const ScalarField& g, const BoundaryTrace& theta) {
    const SparseMatrix mass = mass_matrix(mesh);
    const Eigen::Map<const Vector> gv(g.values().data(), static_cast<Eigen::Index>(g.size()));
    return boundary_load(theta) - mass * gv;
}

ScalarField to_field(const Mesh& mesh, const Vector& v) {
    return ScalarField(mesh, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

MixedProblem::MixedProblem(const BoundaryPartition& partition, ScalarField g, ScalarField f,
                           std::optional<BoundaryTrace> theta)
    : partition_(&partition),
      g_(std::move(g)),
      f_(std::move(f)),
      theta_(theta ? std::move(*theta) : zero_flux(partition, g_.mesh())) {
    if (partition.mesh_fingerprint() != g_.mesh().fingerprint() || f_.mesh().fingerprint() != g_.mesh().fingerprint())
        throw InvalidArgument("MixedProblem: data and partition live on different meshes");
    if (partition.edges(Region::Dirichlet).empty())
        throw InvalidArgument("MixedProblem: Gamma_D must contain at least one edge");
    if (theta_.support() != BoundaryTrace::Support::Edges || theta_.region() != Region::Neumann ||
        theta_.partition_key() != partition.key())
        throw InvalidArgument("MixedProblem: theta must be edge data on the Neumann region of this partition");
}

NeumannProblem::NeumannProblem(ScalarField g, BoundaryTrace theta, std::optional<double> tolerance)
    : g_(std::move(g)), theta_(std::move(theta)), tolerance_(0.0) {
    if (theta_.support() != BoundaryTrace::Support::Edges || theta_.region() != Region::Whole)
        throw InvalidArgument("NeumannProblem: theta must be edge data on the whole boundary");
    if (theta_.mesh().fingerprint() != g_.mesh().fingerprint())
        throw InvalidArgument("NeumannProblem: g and theta live on different meshes");
    tolerance_ = tolerance.value_or(1e-8 * (lp_norm(g_, 2.0) + boundary_l2_norm(theta_) + 1.0));
    if (!(tolerance_ >= 0.0)) throw InvalidArgument("NeumannProblem: tolerance must be >= 0");
}

double compatibility_defect(const ScalarField& g, const BoundaryTrace& theta) {
    if (theta.support() != BoundaryTrace::Support::Edges) throw InvalidArgument("compatibility_defect: theta must be edge data");
    const Mesh& mesh = g.mesh();
    double flux = 0.0;
    for (std::size_t k = 0; k < theta.indices().size(); ++k) flux += mesh.edge_length(theta.indices()[k]) * theta.values()[k];
    return scalar_inner(g, ScalarField::constant(mesh, 1.0)) - flux;
}

double weak_residual(const BoundaryPartition& partition, const ScalarField& u, const ScalarField& g,
                     const BoundaryTrace& theta) {
    const Mesh& mesh = u.mesh();
    const SparseMatrix k = stiffness_matrix(mesh);
    const Eigen::Map<const Vector> uv(u.values().data(), static_cast<Eigen::Index>(u.size()));
    const Vector r = k * uv - right_hand_side(mesh, g, theta);
    double worst = 0.0;
    for (auto i : complement(mesh.num_vertices(), partition.vertices(Region::Dirichlet)))
        worst = std::max(worst, std::abs(r[static_cast<Eigen::Index>(i)]));
    return worst / (w12_norm(u) + lp_norm(g, 2.0) + 1.0);
}

LaplaceSolution solve_mixed(const MixedProblem& problem, const LinearSolveOptions& options) {
    const Mesh& mesh = problem.mesh();
    const auto& fixed = problem.partition().vertices(Region::Dirichlet);
    const auto free = complement(mesh.num_vertices(), fixed);

    Vector u = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (auto i : fixed) u[static_cast<Eigen::Index>(i)] = problem.dirichlet()[i];
    const SparseMatrix k = stiffness_matrix(mesh);
    const int iterations =
        solve_reduced(k, right_hand_side(mesh, problem.load(), problem.flux()), free, fixed, u, options);

    ScalarField field = to_field(mesh, u);
    const double residual = weak_residual(problem.partition(), field, problem.load(), problem.flux());
    return {std::move(field), iterations, residual, 0.0};
}

LaplaceSolution solve_neumann(const NeumannProblem& problem, const LinearSolveOptions& options, NeumannGauge gauge) {
    const Mesh& mesh = problem.mesh();
    const double defect = compatibility_defect(problem.load(), problem.flux());
    if (!(std::abs(defect) <= problem.tolerance()))
        throw CompatibilityError("solve_neumann: compatibility condition <g,1> = <theta, tr 1> violated (defect " +
                                     std::to_string(defect) + ", tolerance " + std::to_string(problem.tolerance()) + ")",
                                 defect, problem.tolerance());

    const SparseMatrix k = stiffness_matrix(mesh);
    const SparseMatrix mass = mass_matrix(mesh);
    // Absorb the admissible defect into a constant shift of g so the load lies in range(K).
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(mesh.num_vertices()));
    const Vector rhs = right_hand_side(mesh, problem.load(), problem.flux()) + (defect / mesh.total_area()) * (mass * ones);

    Vector u = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    int iterations = 0;
    if (gauge == NeumannGauge::ZeroMean) {
        std::vector<std::size_t> all(mesh.num_vertices());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        iterations = solve_reduced(k, rhs, all, {}, u, options);
        const double mean = ones.dot(mass * u) / mesh.total_area();
        u.array() -= mean;
    } else {
        const std::vector<std::size_t> pinned{0};
        iterations = solve_reduced(k, rhs, complement(mesh.num_vertices(), pinned), pinned, u, options);
    }

    ScalarField field = to_field(mesh, u);
    const BoundaryPartition all_neumann(mesh, std::vector<BoundaryKind>(mesh.num_boundary_edges(), BoundaryKind::Neumann));
    const BoundaryTrace theta(mesh, all_neumann, Region::Whole, BoundaryTrace::Support::Edges,
                              std::vector<double>(problem.flux().values().begin(), problem.flux().values().end()));
    const double residual = weak_residual(all_neumann, field, problem.load(), theta);
    return {std::move(field), iterations, residual, defect};
}

}  // namespace sobolev
