#include "sobolev/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sobolev/error.hpp"

namespace sobolev {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite value");
    }
}

void require_same_mesh(const Mesh& a, const Mesh& b, const char* what) {
    if (&a != &b && a.fingerprint() != b.fingerprint())
        throw InvalidArgument(std::string(what) + ": fields live on different meshes");
}

void require_partition(const BoundaryPartition& partition, const Mesh& mesh, const char* what) {
    if (partition.mesh_fingerprint() != mesh.fingerprint())
        throw InvalidArgument(std::string(what) + ": partition does not belong to the field's mesh");
}

// Degree-4 symmetric rule on the reference triangle (barycentric points, unit weights).
struct QuadPoint {
    double l0, l1, l2, w;
};
constexpr double kQa = 0.445948490915965, kQb = 0.108103018168070;
constexpr double kQc = 0.091576213509771, kQd = 0.816847572980459;
constexpr double kWab = 0.223381589678011, kWcd = 0.109951743655322;
constexpr QuadPoint kDunavant4[6] = {
    {kQa, kQa, kQb, kWab}, {kQa, kQb, kQa, kWab}, {kQb, kQa, kQa, kWab},
    {kQc, kQc, kQd, kWcd}, {kQc, kQd, kQc, kWcd}, {kQd, kQc, kQc, kWcd},
};

double powered_sum(std::span<const double> magnitudes, std::span<const double> weights, double p) {
    double top = 0.0;
    for (double m : magnitudes) top = std::max(top, m);
    if (top == 0.0) return 0.0;
    if (std::isinf(p)) return top;
    // Scale by the maximum so large p cannot overflow.
    double acc = 0.0;
    for (std::size_t i = 0; i < magnitudes.size(); ++i) acc += weights[i] * std::pow(magnitudes[i] / top, p);
    return top * std::pow(acc, 1.0 / p);
}

}  // namespace

// Fields ---------------------------------------------------------------------------

ScalarField::ScalarField(const Mesh& mesh, std::vector<double> values) : mesh_(&mesh), values_(std::move(values)) {
    if (values_.size() != mesh.num_vertices())
        throw InvalidArgument("ScalarField: " + std::to_string(values_.size()) + " values for " +
                              std::to_string(mesh.num_vertices()) + " vertices");
    require_finite(values_, "ScalarField");
}

ScalarField ScalarField::constant(const Mesh& mesh, double c) {
    return ScalarField(mesh, std::vector<double>(mesh.num_vertices(), c));
}

ScalarField ScalarField::interpolate(const Mesh& mesh, const std::function<double(Point)>& fn) {
    std::vector<double> v(mesh.num_vertices());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(mesh.vertex(i));
    return ScalarField(mesh, std::move(v));
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    require_same_mesh(a.mesh(), b.mesh(), "ScalarField +");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + b[i];
    return ScalarField(a.mesh(), std::move(v));
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    require_same_mesh(a.mesh(), b.mesh(), "ScalarField -");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
    return ScalarField(a.mesh(), std::move(v));
}

ScalarField operator*(double s, const ScalarField& a) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * a[i];
    return ScalarField(a.mesh(), std::move(v));
}

VectorField::VectorField(const Mesh& mesh, std::vector<Vec2> values) : mesh_(&mesh), values_(std::move(values)) {
    if (values_.size() != mesh.num_triangles())
        throw InvalidArgument("VectorField: " + std::to_string(values_.size()) + " values for " +
                              std::to_string(mesh.num_triangles()) + " triangles");
    for (const auto& v : values_) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidArgument("VectorField: non-finite value");
    }
}

VectorField VectorField::constant(const Mesh& mesh, Vec2 c) {
    return VectorField(mesh, std::vector<Vec2>(mesh.num_triangles(), c));
}

VectorField VectorField::sample(const Mesh& mesh, const std::function<Vec2(Point)>& fn) {
    std::vector<Vec2> v(mesh.num_triangles());
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = fn(mesh.centroid(t));
    return VectorField(mesh, std::move(v));
}

VectorField operator+(const VectorField& a, const VectorField& b) {
    require_same_mesh(a.mesh(), b.mesh(), "VectorField +");
    std::vector<Vec2> v(a.size());
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = a[t] + b[t];
    return VectorField(a.mesh(), std::move(v));
}

VectorField operator*(double s, const VectorField& a) {
    std::vector<Vec2> v(a.size());
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = s * a[t];
    return VectorField(a.mesh(), std::move(v));
}

BoundaryTrace::BoundaryTrace(const Mesh& mesh, const BoundaryPartition& partition, Region region, Support support,
                             std::vector<double> values)
    : mesh_(&mesh), region_(region), support_(support), values_(std::move(values)), partition_key_(partition.key()) {
    require_partition(partition, mesh, "BoundaryTrace");
    const auto& ids = support == Support::Vertices ? partition.vertices(region) : partition.edges(region);
    if (ids.size() != values_.size())
        throw InvalidArgument("BoundaryTrace: " + std::to_string(values_.size()) + " values for " +
                              std::to_string(ids.size()) + " " + (support == Support::Vertices ? "vertices" : "edges") +
                              " of region " + std::string(to_string(region)));
    require_finite(values_, "BoundaryTrace");
    indices_ = ids;
}

BoundaryTrace BoundaryTrace::edge_function(const Mesh& mesh, const BoundaryPartition& partition, Region region,
                                           const std::function<double(Point, Vec2)>& fn) {
    const auto& edges = partition.edges(region);
    std::vector<double> v(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& be = mesh.boundary_edge(edges[k]);
        v[k] = fn(0.5 * (mesh.vertex(be.a) + mesh.vertex(be.b)), mesh.normal(edges[k]));
    }
    return BoundaryTrace(mesh, partition, region, Support::Edges, std::move(v));
}

BoundaryTrace BoundaryTrace::edge_constant(const Mesh& mesh, const BoundaryPartition& partition, Region region,
                                           double c) {
    return BoundaryTrace(mesh, partition, region, Support::Edges,
                         std::vector<double>(partition.edges(region).size(), c));
}

double BoundaryTrace::at(std::size_t id) const {
    const auto it = std::lower_bound(indices_.begin(), indices_.end(), id);
    if (it == indices_.end() || *it != id)
        throw InvalidArgument("BoundaryTrace: id " + std::to_string(id) + " is not in region " +
                              std::string(to_string(region_)));
    return values_[static_cast<std::size_t>(it - indices_.begin())];
}

// Operators ---------------------------------------------------------------------------

VectorField gradient(const ScalarField& u) {
    const Mesh& mesh = u.mesh();
    std::vector<Vec2> g(mesh.num_triangles());
    for (std::size_t t = 0; t < g.size(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& sg = mesh.shape_gradients(t);
        g[t] = u[tri[0]] * sg[0] + u[tri[1]] * sg[1] + u[tri[2]] * sg[2];
    }
    return VectorField(mesh, std::move(g));
}

double scalar_inner(const ScalarField& u, const ScalarField& v) {
    require_same_mesh(u.mesh(), v.mesh(), "scalar_inner");
    const Mesh& mesh = u.mesh();
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& [a, b, c] = mesh.triangle(t);
        // area/12 * (sum u_i v_i + (sum u)(sum v)); both terms are symmetric in (u, v).
        const double diag = u[a] * v[a] + u[b] * v[b] + u[c] * v[c];
        const double sums = (u[a] + u[b] + u[c]) * (v[a] + v[b] + v[c]);
        acc += mesh.area(t) / 12.0 * (diag + sums);
    }
    return acc;
}

double vector_inner(const VectorField& beta, const VectorField& gamma) {
    require_same_mesh(beta.mesh(), gamma.mesh(), "vector_inner");
    const Mesh& mesh = beta.mesh();
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) acc += mesh.area(t) * dot(beta[t], gamma[t]);
    return acc;
}

double lp_norm(const ScalarField& u, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("lp_norm: p must be >= 1");
    if (p == 2.0) return std::sqrt(std::max(0.0, scalar_inner(u, u)));
    const Mesh& mesh = u.mesh();
    std::vector<double> mags(mesh.num_triangles()), weights(mesh.num_triangles());
    for (std::size_t t = 0; t < mags.size(); ++t) {
        const auto& [a, b, c] = mesh.triangle(t);
        mags[t] = std::abs((u[a] + u[b] + u[c]) / 3.0);
        weights[t] = mesh.area(t);
    }
    return powered_sum(mags, weights, p);
}

double lp_norm(const VectorField& beta, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("lp_norm: p must be >= 1");
    const Mesh& mesh = beta.mesh();
    std::vector<double> mags(mesh.num_triangles()), weights(mesh.num_triangles());
    for (std::size_t t = 0; t < mags.size(); ++t) {
        mags[t] = norm(beta[t]);
        weights[t] = mesh.area(t);
    }
    return powered_sum(mags, weights, p);
}

double w12_norm(const ScalarField& u) {
    const double l2 = lp_norm(u, 2.0);
    const double g2 = lp_norm(gradient(u), 2.0);
    return std::sqrt(l2 * l2 + g2 * g2);
}

ScalarField weak_divergence(const BoundaryPartition& partition, const VectorField& beta) {
    const Mesh& mesh = beta.mesh();
    require_partition(partition, mesh, "weak_divergence");
    Vector rhs = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& sg = mesh.shape_gradients(t);
        for (int i = 0; i < 3; ++i) rhs[static_cast<Eigen::Index>(tri[i])] -= mesh.area(t) * dot(beta[t], sg[i]);
    }
    for (std::size_t e = 0; e < mesh.num_boundary_edges(); ++e) {
        const auto& be = mesh.boundary_edge(e);
        const double flux = 0.5 * mesh.edge_length(e) * dot(beta[mesh.boundary_triangle(e)], mesh.normal(e));
        rhs[static_cast<Eigen::Index>(be.a)] += flux;
        rhs[static_cast<Eigen::Index>(be.b)] += flux;
    }
    const SparseMatrix mass = mass_matrix(mesh);
    Vector d = Vector::Zero(rhs.size());
    // Jacobi-scaled P1 mass matrices have condition number below 10 on any mesh.
    conjugate_gradient(mass, rhs, d, 1e-14, 2000);
    return ScalarField(mesh, std::vector<double>(d.data(), d.data() + d.size()));
}

BoundaryTrace trace(const BoundaryPartition& partition, const ScalarField& u, Region region) {
    require_partition(partition, u.mesh(), "trace");
    const auto& verts = partition.vertices(region);
    std::vector<double> v(verts.size());
    for (std::size_t k = 0; k < verts.size(); ++k) v[k] = u[verts[k]];
    return BoundaryTrace(u.mesh(), partition, region, BoundaryTrace::Support::Vertices, std::move(v));
}

BoundaryTrace cotrace(const BoundaryPartition& partition, const VectorField& beta, Region region) {
    const Mesh& mesh = beta.mesh();
    require_partition(partition, mesh, "cotrace");
    const auto& edges = partition.edges(region);
    std::vector<double> v(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k)
        v[k] = dot(beta[mesh.boundary_triangle(edges[k])], mesh.normal(edges[k]));
    return BoundaryTrace(mesh, partition, region, BoundaryTrace::Support::Edges, std::move(v));
}

double boundary_pairing(const BoundaryTrace& trace_u, const BoundaryTrace& cotrace_beta) {
    if (trace_u.support() != BoundaryTrace::Support::Vertices || cotrace_beta.support() != BoundaryTrace::Support::Edges)
        throw InvalidArgument("boundary_pairing: expects a vertex trace and an edge cotrace");
    if (trace_u.region() != cotrace_beta.region() || trace_u.partition_key() != cotrace_beta.partition_key())
        throw InvalidArgument("boundary_pairing: trace and cotrace live on different regions");
    const Mesh& mesh = cotrace_beta.mesh();
    double acc = 0.0;
    const auto ids = cotrace_beta.indices();
    const auto flux = cotrace_beta.values();
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto& be = mesh.boundary_edge(ids[k]);
        acc += mesh.edge_length(ids[k]) * flux[k] * 0.5 * (trace_u.at(be.a) + trace_u.at(be.b));
    }
    return acc;
}

double boundary_l2_norm(const BoundaryTrace& edge_values) {
    if (edge_values.support() != BoundaryTrace::Support::Edges)
        throw InvalidArgument("boundary_l2_norm: expects edge-supported data");
    const Mesh& mesh = edge_values.mesh();
    double acc = 0.0;
    for (std::size_t k = 0; k < edge_values.indices().size(); ++k) {
        const double v = edge_values.values()[k];
        acc += mesh.edge_length(edge_values.indices()[k]) * v * v;
    }
    return std::sqrt(acc);
}

double ibp_residual(const BoundaryPartition& partition, const ScalarField& u, const VectorField& beta,
                    const ScalarField& div_beta, Region region) {
    require_same_mesh(u.mesh(), beta.mesh(), "ibp_residual");
    const double volume = vector_inner(beta, gradient(u)) + scalar_inner(div_beta, u);
    return volume - boundary_pairing(trace(partition, u, region), cotrace(partition, beta, region));
}

// Assembly ------------------------------------------------------------------------------

SparseMatrix stiffness_matrix(const Mesh& mesh) {
    std::vector<std::array<double, 3>> identity(mesh.num_triangles(), {1.0, 0.0, 1.0});
    return weighted_stiffness_matrix(mesh, identity);
}

SparseMatrix weighted_stiffness_matrix(const Mesh& mesh, std::span<const std::array<double, 3>> weights) {
    if (weights.size() != mesh.num_triangles()) throw InvalidArgument("weighted_stiffness_matrix: one weight per triangle");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& sg = mesh.shape_gradients(t);
        const auto& [wxx, wxy, wyy] = weights[t];
        for (int i = 0; i < 3; ++i) {
            const Vec2 wg{wxx * sg[i].x + wxy * sg[i].y, wxy * sg[i].x + wyy * sg[i].y};
            for (int j = 0; j < 3; ++j) {
                trips.emplace_back(static_cast<Eigen::Index>(tri[i]), static_cast<Eigen::Index>(tri[j]),
                                   mesh.area(t) * dot(wg, sg[j]));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    SparseMatrix k(n, n);
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

SparseMatrix mass_matrix(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                trips.emplace_back(static_cast<Eigen::Index>(tri[i]), static_cast<Eigen::Index>(tri[j]),
                                   mesh.area(t) * (i == j ? 2.0 : 1.0) / 12.0);
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    SparseMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

Vector boundary_load(const BoundaryTrace& theta) {
    if (theta.support() != BoundaryTrace::Support::Edges) throw InvalidArgument("boundary_load: expects edge data");
    const Mesh& mesh = theta.mesh();
    Vector load = Vector::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t k = 0; k < theta.indices().size(); ++k) {
        const std::size_t e = theta.indices()[k];
        const auto& be = mesh.boundary_edge(e);
        const double half = 0.5 * mesh.edge_length(e) * theta.values()[k];
        load[static_cast<Eigen::Index>(be.a)] += half;
        load[static_cast<Eigen::Index>(be.b)] += half;
    }
    return load;
}

// Utilities -------------------------------------------------------------------------------

double l2_error(const ScalarField& u, const std::function<double(Point)>& exact) {
    const Mesh& mesh = u.mesh();
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& [a, b, c] = mesh.triangle(t);
        const Point pa = mesh.vertex(a), pb = mesh.vertex(b), pc = mesh.vertex(c);
        double local = 0.0;
        for (const auto& q : kDunavant4) {
            const Point x = q.l0 * pa + q.l1 * pb + q.l2 * pc;
            const double diff = q.l0 * u[a] + q.l1 * u[b] + q.l2 * u[c] - exact(x);
            local += q.w * diff * diff;
        }
        acc += mesh.area(t) * local;
    }
    return std::sqrt(acc);
}

double integrate(const Mesh& mesh, const std::function<double(Point)>& fn) {
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& [a, b, c] = mesh.triangle(t);
        const Point pa = mesh.vertex(a), pb = mesh.vertex(b), pc = mesh.vertex(c);
        double local = 0.0;
        for (const auto& q : kDunavant4) local += q.w * fn(q.l0 * pa + q.l1 * pb + q.l2 * pc);
        acc += mesh.area(t) * local;
    }
    return acc;
}

ScalarField prolongate(const ScalarField& coarse, const Mesh& fine) {
    const auto parents = refinement_parents(coarse.mesh());
    if (fine.num_vertices() != coarse.size() + parents.size())
        throw InvalidArgument("prolongate: fine mesh is not the red refinement of the field's mesh");
    std::vector<double> v(coarse.values().begin(), coarse.values().end());
    v.reserve(fine.num_vertices());
    for (const auto& [a, b] : parents) v.push_back(0.5 * (coarse[a] + coarse[b]));
    return ScalarField(fine, std::move(v));
}

}  // namespace sobolev
