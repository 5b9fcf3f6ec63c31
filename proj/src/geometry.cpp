#include "sobolev/geometry.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <unordered_map>
#include <utility>

#include "sobolev/error.hpp"

namespace sobolev {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

std::string edge_name(const Mesh& mesh, std::size_t e) {
    const auto& be = mesh.boundary_edge(e);
    return "boundary edge " + std::to_string(e) + " (" + std::to_string(be.a) + "->" +
           std::to_string(be.b) + ", '" + be.label + "')";
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
           std::vector<BoundaryEdge> boundary, std::vector<std::size_t> singular_vertices)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)),
      singular_(std::move(singular_vertices)) {
    const std::size_t nv = vertices_.size();
    if (nv == 0 || triangles_.empty()) throw InvalidArgument("mesh: empty vertex or triangle list");
    if (nv >= (std::size_t{1} << 32)) throw InvalidArgument("mesh: too many vertices");
    for (const auto& p : vertices_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw InvalidArgument("mesh: non-finite vertex coordinate");
    }

    areas_.resize(triangles_.size());
    shape_grads_.resize(triangles_.size());
    std::unordered_map<std::uint64_t, std::size_t> directed;  // directed edge -> triangle
    directed.reserve(3 * triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (auto v : tri) {
            if (v >= nv) throw InvalidArgument("mesh: triangle " + std::to_string(t) + " has invalid vertex index");
        }
        const Point p0 = vertices_[tri[0]], p1 = vertices_[tri[1]], p2 = vertices_[tri[2]];
        const double twice = cross(p1 - p0, p2 - p0);
        if (!(twice > 0.0))
            throw InvalidArgument("mesh: triangle " + std::to_string(t) + " is degenerate or clockwise");
        areas_[t] = 0.5 * twice;
        // grad lambda_i = rot90(opposite edge) / (2 area), rot90(x, y) = (-y, x) for a CCW triangle
        for (int i = 0; i < 3; ++i) {
            const Point a = vertices_[tri[(i + 1) % 3]];
            const Point b = vertices_[tri[(i + 2) % 3]];
            const Vec2 e = b - a;
            shape_grads_[t][i] = Vec2{-e.y / twice, e.x / twice};
        }
        for (int i = 0; i < 3; ++i) {
            const auto key = edge_key(tri[i], tri[(i + 1) % 3]);
            if (!directed.emplace(key, t).second)
                throw InvalidArgument("mesh: directed edge " + std::to_string(tri[i]) + "->" +
                                      std::to_string(tri[(i + 1) % 3]) +
                                      " used twice (non-manifold or inconsistent orientation)");
        }
    }
    // Summation in element order keeps the total reproducible.
    for (double a : areas_) total_area_ += a;

    std::size_t unmatched = 0;
    for (const auto& [key, t] : directed) {
        const std::size_t a = key >> 32, b = key & 0xffffffffULL;
        if (!directed.contains(edge_key(b, a))) ++unmatched;
    }
    if (unmatched != boundary_.size())
        throw InvalidArgument("mesh: " + std::to_string(boundary_.size()) + " boundary edges given but " +
                              std::to_string(unmatched) + " edges belong to a single triangle");

    normals_.resize(boundary_.size());
    lengths_.resize(boundary_.size());
    boundary_tri_.resize(boundary_.size());
    on_boundary_.assign(nv, 0);
    std::vector<int> out_degree(nv, 0), in_degree(nv, 0);
    for (std::size_t e = 0; e < boundary_.size(); ++e) {
        const auto& be = boundary_[e];
        if (be.a >= nv || be.b >= nv) throw InvalidArgument("mesh: boundary edge with invalid vertex index");
        const auto it = directed.find(edge_key(be.a, be.b));
        if (it == directed.end() || directed.contains(edge_key(be.b, be.a)))
            throw InvalidArgument("mesh: " + std::to_string(be.a) + "->" + std::to_string(be.b) +
                                  " is not a counterclockwise boundary edge");
        boundary_tri_[e] = it->second;
        const Vec2 d = vertices_[be.b] - vertices_[be.a];
        lengths_[e] = norm(d);
        normals_[e] = Vec2{d.y / lengths_[e], -d.x / lengths_[e]};
        on_boundary_[be.a] = on_boundary_[be.b] = 1;
        ++out_degree[be.a];
        ++in_degree[be.b];
    }
    for (std::size_t v = 0; v < nv; ++v) {
        if (out_degree[v] != in_degree[v] || out_degree[v] > 1)
            throw InvalidArgument("mesh: boundary is not a union of simple closed loops at vertex " +
                                  std::to_string(v));
    }

    std::sort(singular_.begin(), singular_.end());
    singular_.erase(std::unique(singular_.begin(), singular_.end()), singular_.end());
    for (auto v : singular_) {
        if (v >= nv) throw InvalidArgument("mesh: singular vertex index out of range");
    }

    std::vector<std::vector<std::size_t>> adj(nv);
    for (const auto& [key, t] : directed) {
        const std::size_t a = key >> 32, b = key & 0xffffffffULL;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    adj_offsets_.assign(nv + 1, 0);
    for (std::size_t v = 0; v < nv; ++v) {
        auto& row = adj[v];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        adj_offsets_[v + 1] = adj_offsets_[v] + row.size();
        for (auto w : row) h_max_ = std::max(h_max_, norm(vertices_[w] - vertices_[v]));
    }
    adj_.reserve(adj_offsets_.back());
    for (const auto& row : adj) adj_.insert(adj_.end(), row.begin(), row.end());

    std::uint64_t h = kFnvOffset;
    for (const auto& p : vertices_) {
        fnv_mix(h, &p.x, sizeof(double));
        fnv_mix(h, &p.y, sizeof(double));
    }
    for (const auto& tri : triangles_) {
        for (auto v : tri) {
            const auto w = static_cast<std::uint64_t>(v);
            fnv_mix(h, &w, sizeof(w));
        }
    }
    fingerprint_ = h;
}

Mesh Mesh::from_triangles(std::vector<Point> vertices, std::vector<Triangle> triangles,
                          const std::function<std::string(Point, Point)>& labeler,
                          std::vector<std::size_t> singular_vertices) {
    std::set<std::pair<std::size_t, std::size_t>> directed;
    for (const auto& tri : triangles) {
        for (int i = 0; i < 3; ++i) directed.emplace(tri[i], tri[(i + 1) % 3]);
    }
    // Emit boundary edges in triangle order so numbering follows construction order.
    std::vector<BoundaryEdge> boundary;
    for (const auto& tri : triangles) {
        for (int i = 0; i < 3; ++i) {
            const std::size_t a = tri[i], b = tri[(i + 1) % 3];
            if (a >= vertices.size() || b >= vertices.size()) continue;  // rejected by the constructor
            if (!directed.contains({b, a})) boundary.push_back({a, b, labeler(vertices[a], vertices[b])});
        }
    }
    return Mesh(std::move(vertices), std::move(triangles), std::move(boundary), std::move(singular_vertices));
}

Point Mesh::centroid(std::size_t t) const {
    const auto& tri = triangles_[t];
    const Point a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
    return Point{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::span<const std::size_t> Mesh::neighbors(std::size_t v) const {
    return std::span<const std::size_t>(adj_).subspan(adj_offsets_[v], adj_offsets_[v + 1] - adj_offsets_[v]);
}

bool Mesh::is_nonobtuse(double tol) const {
    for (const auto& tri : triangles_) {
        for (int i = 0; i < 3; ++i) {
            const Point p = vertices_[tri[i]];
            const Vec2 u = vertices_[tri[(i + 1) % 3]] - p;
            const Vec2 w = vertices_[tri[(i + 2) % 3]] - p;
            const double angle = std::atan2(std::abs(cross(u, w)), dot(u, w));
            if (angle > std::numbers::pi / 2 + tol) return false;
        }
    }
    return true;
}

// Partition -------------------------------------------------------------------

std::string_view to_string(BoundaryKind kind) {
    return kind == BoundaryKind::Dirichlet ? "dirichlet" : "neumann";
}

std::string_view to_string(Region region) {
    switch (region) {
        case Region::Dirichlet: return "dirichlet";
        case Region::Neumann: return "neumann";
        case Region::Whole: return "whole";
    }
    return "?";
}

Region parse_region(std::string_view name) {
    if (name == "dirichlet") return Region::Dirichlet;
    if (name == "neumann") return Region::Neumann;
    if (name == "whole" || name == "boundary") return Region::Whole;
    throw InvalidArgument("unknown boundary region '" + std::string(name) + "'");
}

BoundaryPartition::BoundaryPartition(const Mesh& mesh, std::vector<BoundaryKind> kinds,
                                     std::vector<std::size_t> extra_singular,
                                     std::vector<std::size_t> constraint_nodes)
    : kinds_(std::move(kinds)), constraint_(std::move(constraint_nodes)), mesh_fingerprint_(mesh.fingerprint()) {
    if (kinds_.size() != mesh.num_boundary_edges())
        throw InvalidArgument("partition: " + std::to_string(kinds_.size()) + " tags for " +
                              std::to_string(mesh.num_boundary_edges()) + " boundary edges");

    std::array<std::set<std::size_t>, 3> verts;
    // Each boundary vertex has exactly one incoming and one outgoing edge.
    std::vector<std::size_t> incoming(mesh.num_vertices(), mesh.num_boundary_edges());
    for (std::size_t e = 0; e < kinds_.size(); ++e) {
        const auto& be = mesh.boundary_edge(e);
        incoming[be.b] = e;
        const auto r = static_cast<std::size_t>(kinds_[e] == BoundaryKind::Dirichlet ? Region::Dirichlet
                                                                                      : Region::Neumann);
        edges_[r].push_back(e);
        edges_[static_cast<std::size_t>(Region::Whole)].push_back(e);
        verts[r].insert(be.a);
        verts[r].insert(be.b);
        verts[static_cast<std::size_t>(Region::Whole)].insert(be.a);
        verts[static_cast<std::size_t>(Region::Whole)].insert(be.b);
    }
    for (std::size_t r = 0; r < 3; ++r) vertices_[r].assign(verts[r].begin(), verts[r].end());

    std::set<std::size_t> e_set(mesh.singular_vertices().begin(), mesh.singular_vertices().end());
    for (auto v : extra_singular) {
        if (v >= mesh.num_vertices()) throw InvalidArgument("partition: singular vertex out of range");
        e_set.insert(v);
    }
    for (std::size_t e = 0; e < kinds_.size(); ++e) {
        const std::size_t prev = incoming[mesh.boundary_edge(e).a];
        if (kinds_[prev] != kinds_[e]) e_set.insert(mesh.boundary_edge(e).a);
    }
    singular_.assign(e_set.begin(), e_set.end());

    key_ = kFnvOffset;
    fnv_mix(key_, &mesh_fingerprint_, sizeof(mesh_fingerprint_));
    fnv_mix(key_, kinds_.data(), kinds_.size() * sizeof(BoundaryKind));

    std::sort(constraint_.begin(), constraint_.end());
    constraint_.erase(std::unique(constraint_.begin(), constraint_.end()), constraint_.end());
    for (auto v : constraint_) {
        if (v >= mesh.num_vertices()) throw InvalidArgument("partition: constraint node out of range");
    }
}

bool BoundaryPartition::in_region(std::size_t e, Region region) const {
    switch (region) {
        case Region::Dirichlet: return kinds_[e] == BoundaryKind::Dirichlet;
        case Region::Neumann: return kinds_[e] == BoundaryKind::Neumann;
        case Region::Whole: return true;
    }
    return false;
}

const std::vector<std::size_t>& BoundaryPartition::edges(Region region) const {
    return edges_[static_cast<std::size_t>(region)];
}

const std::vector<std::size_t>& BoundaryPartition::vertices(Region region) const {
    return vertices_[static_cast<std::size_t>(region)];
}

TagRule tag_labels(std::vector<std::string> labels, BoundaryKind kind) {
    std::string name = std::string(to_string(kind)) + "{";
    for (std::size_t i = 0; i < labels.size(); ++i) name += (i ? "," : "") + labels[i];
    name += "}";
    return TagRule{std::move(name),
                   [labels = std::move(labels)](const EdgeView& e) {
                       return std::find(labels.begin(), labels.end(), e.label) != labels.end();
                   },
                   kind};
}

TagRule tag_everything(BoundaryKind kind) {
    return TagRule{std::string(to_string(kind)) + "{*}", [](const EdgeView&) { return true; }, kind};
}

BoundaryPartition tag_boundary(const Mesh& mesh, std::span<const TagRule> rules,
                               std::vector<std::size_t> constraint_nodes) {
    std::vector<BoundaryKind> kinds(mesh.num_boundary_edges());
    for (std::size_t e = 0; e < mesh.num_boundary_edges(); ++e) {
        const auto& be = mesh.boundary_edge(e);
        const Point a = mesh.vertex(be.a), b = mesh.vertex(be.b);
        const EdgeView view{e, a, b, 0.5 * (a + b), be.label};
        const TagRule* hit = nullptr;
        for (const auto& rule : rules) {
            if (!rule.predicate(view)) continue;
            if (hit) throw InvalidArgument("tag_boundary: " + edge_name(mesh, e) + " matched by both '" +
                                           hit->name + "' and '" + rule.name + "'");
            hit = &rule;
        }
        if (!hit) throw InvalidArgument("tag_boundary: " + edge_name(mesh, e) + " is not covered by any rule");
        kinds[e] = hit->kind;
    }
    return BoundaryPartition(mesh, std::move(kinds), {}, std::move(constraint_nodes));
}

// Generators --------------------------------------------------------------------

Mesh build_rectangle(Point lower_left, Point upper_right, std::size_t nx, std::size_t ny) {
    if (nx == 0 || ny == 0) throw InvalidArgument("build_rectangle: subdivision must be >= 1");
    if (!(upper_right.x > lower_left.x) || !(upper_right.y > lower_left.y))
        throw InvalidArgument("build_rectangle: empty box");
    const double w = upper_right.x - lower_left.x, hgt = upper_right.y - lower_left.y;
    std::vector<Point> vertices;
    vertices.reserve((nx + 1) * (ny + 1));
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            // Pin the far sides so the box extent is reproduced exactly.
            const double x = i == nx ? upper_right.x : lower_left.x + w * static_cast<double>(i) / static_cast<double>(nx);
            const double y = j == ny ? upper_right.y : lower_left.y + hgt * static_cast<double>(j) / static_cast<double>(ny);
            vertices.push_back({x, y});
        }
    }
    auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
    std::vector<Triangle> triangles;
    triangles.reserve(2 * nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    const Point ll = lower_left, ur = upper_right;
    return Mesh::from_triangles(std::move(vertices), std::move(triangles), [ll, ur](Point a, Point b) -> std::string {
        if (a.x == ll.x && b.x == ll.x) return "left";
        if (a.x == ur.x && b.x == ur.x) return "right";
        if (a.y == ll.y && b.y == ll.y) return "bottom";
        return "top";
    });
}

Mesh build_unit_square(std::size_t n) {
    if (n == 0) throw InvalidArgument("build_unit_square: n must be >= 1");
    return build_rectangle({0.0, 0.0}, {1.0, 1.0}, n, n);
}

Mesh build_annulus(double r_in, double r_out, std::size_t n_radial, std::size_t n_angular, RadialGrading grading) {
    if (!(r_in > 0.0)) throw InvalidArgument("build_annulus: r_in must be > 0 (a point puncture cannot be meshed)");
    if (!(r_out > r_in)) throw InvalidArgument("build_annulus: need r_in < r_out");
    if (n_radial < 1 || n_angular < 3) throw InvalidArgument("build_annulus: need n_radial >= 1 and n_angular >= 3");

    std::vector<double> radii(n_radial + 1);
    for (std::size_t i = 0; i <= n_radial; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n_radial);
        radii[i] = grading == RadialGrading::Geometric ? r_in * std::pow(r_out / r_in, s) : r_in + (r_out - r_in) * s;
    }
    radii.front() = r_in;
    radii.back() = r_out;

    std::vector<Point> vertices;
    vertices.reserve((n_radial + 1) * n_angular);
    for (std::size_t i = 0; i <= n_radial; ++i) {
        for (std::size_t j = 0; j < n_angular; ++j) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_angular);
            vertices.push_back({radii[i] * std::cos(theta), radii[i] * std::sin(theta)});
        }
    }
    auto id = [n_angular](std::size_t i, std::size_t j) { return i * n_angular + (j % n_angular); };
    std::vector<Triangle> triangles;
    triangles.reserve(2 * n_radial * n_angular);
    for (std::size_t i = 0; i < n_radial; ++i) {
        for (std::size_t j = 0; j < n_angular; ++j) {
            triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    const double r_mid = std::sqrt(r_in * r_out);
    return Mesh::from_triangles(std::move(vertices), std::move(triangles), [r_mid](Point a, Point) -> std::string {
        return norm(a) < r_mid ? "inner" : "outer";
    });
}

Mesh build_cusp(double k, std::size_t n, double grading_ratio) {
    if (!(k >= 1.0)) throw InvalidArgument("build_cusp: exponent k must be >= 1");
    if (n < 2) throw InvalidArgument("build_cusp: n must be >= 2");
    if (!(grading_ratio > 0.0 && grading_ratio < 1.0)) throw InvalidArgument("build_cusp: grading ratio must lie in (0,1)");

    // Geometric breakpoints 1, r, r^2, ... stop once the remaining tip carries
    // under 0.1% of the area 1/(k+1); each gap is split into n equal columns.
    const double tip_cut = std::pow(1e-3, 1.0 / (k + 1.0));
    std::vector<double> breaks{1.0};
    while (breaks.back() > tip_cut) breaks.push_back(breaks.back() * grading_ratio);
    std::vector<double> columns;  // ascending abscissas
    for (std::size_t g = breaks.size() - 1; g > 0; --g) {
        const double lo = breaks[g], hi = breaks[g - 1];
        for (std::size_t s = 0; s < n; ++s)
            columns.push_back(lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(n));
    }
    columns.push_back(1.0);

    std::vector<Point> vertices{{0.0, 0.0}};
    for (double x : columns) {
        const double half = 0.5 * std::pow(x, k);
        for (std::size_t j = 0; j <= n; ++j)
            vertices.push_back({x, -half + 2.0 * half * static_cast<double>(j) / static_cast<double>(n)});
        vertices.back().y = half;
    }
    auto id = [n](std::size_t c, std::size_t j) { return 1 + c * (n + 1) + j; };
    std::vector<Triangle> triangles;
    for (std::size_t j = 0; j < n; ++j) triangles.push_back({0, id(0, j), id(0, j + 1)});
    for (std::size_t c = 0; c + 1 < columns.size(); ++c) {
        for (std::size_t j = 0; j < n; ++j) {
            triangles.push_back({id(c, j), id(c + 1, j), id(c + 1, j + 1)});
            triangles.push_back({id(c, j), id(c + 1, j + 1), id(c, j + 1)});
        }
    }
    return Mesh::from_triangles(
        std::move(vertices), std::move(triangles),
        [](Point a, Point b) -> std::string {
            if (a.x == 1.0 && b.x == 1.0) return "right";
            return a.y + b.y < 0.0 ? "lower" : "upper";
        },
        {0});
}

Mesh build_domain(const DomainSpec& spec) {
    switch (spec.kind) {
        case DomainSpec::Kind::UnitSquare: return build_unit_square(spec.n);
        case DomainSpec::Kind::Rectangle: {
            const auto ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                         static_cast<double>(spec.n) * spec.height / spec.width)));
            return build_rectangle({0.0, 0.0}, {spec.width, spec.height}, spec.n, ny);
        }
        case DomainSpec::Kind::Annulus: return build_annulus(spec.r_in, spec.r_out, spec.n_radial, spec.n_angular);
        case DomainSpec::Kind::Cusp: return build_cusp(spec.k, spec.n, spec.grading_ratio);
    }
    throw InvalidArgument("build_domain: unknown kind");
}

// Refinement ---------------------------------------------------------------------

namespace {

struct Midpoints {
    std::vector<std::array<std::size_t, 2>> parents;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
};

Midpoints collect_midpoints(const Mesh& mesh) {
    Midpoints m;
    for (const auto& tri : mesh.triangles()) {
        for (int i = 0; i < 3; ++i) {
            const std::size_t a = tri[i], b = tri[(i + 1) % 3];
            const auto key = std::minmax(a, b);
            if (m.index.emplace(key, mesh.num_vertices() + m.parents.size()).second)
                m.parents.push_back({key.first, key.second});
        }
    }
    return m;
}

}  // namespace

std::vector<std::array<std::size_t, 2>> refinement_parents(const Mesh& mesh) {
    return collect_midpoints(mesh).parents;
}

Mesh refine(const Mesh& mesh) {
    const Midpoints mids = collect_midpoints(mesh);
    std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
    vertices.reserve(mesh.num_vertices() + mids.parents.size());
    for (const auto& [a, b] : mids.parents) {
        const Point pa = mesh.vertex(a), pb = mesh.vertex(b);
        vertices.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
    }
    auto mid = [&](std::size_t a, std::size_t b) { return mids.index.at(std::minmax(a, b)); };
    std::vector<Triangle> triangles;
    triangles.reserve(4 * mesh.num_triangles());
    for (const auto& [a, b, c] : mesh.triangles()) {
        const std::size_t ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        triangles.push_back({a, ab, ca});
        triangles.push_back({ab, b, bc});
        triangles.push_back({ca, bc, c});
        triangles.push_back({ab, bc, ca});
    }
    std::vector<BoundaryEdge> boundary;
    boundary.reserve(2 * mesh.num_boundary_edges());
    for (const auto& be : mesh.boundary_edges()) {
        const std::size_t m = mid(be.a, be.b);
        boundary.push_back({be.a, m, be.label});
        boundary.push_back({m, be.b, be.label});
    }
    std::vector<std::size_t> singular(mesh.singular_vertices().begin(), mesh.singular_vertices().end());
    return Mesh(std::move(vertices), std::move(triangles), std::move(boundary), std::move(singular));
}

BoundaryPartition refine(const BoundaryPartition& partition, const Mesh& coarse, const Mesh& fine) {
    if (partition.mesh_fingerprint() != coarse.fingerprint())
        throw InvalidArgument("refine: partition does not belong to the coarse mesh");
    if (fine.num_boundary_edges() != 2 * coarse.num_boundary_edges())
        throw InvalidArgument("refine: fine mesh is not the red refinement of the coarse mesh");
    std::vector<BoundaryKind> kinds;
    kinds.reserve(fine.num_boundary_edges());
    for (std::size_t e = 0; e < partition.num_edges(); ++e) {
        kinds.push_back(partition.kind(e));
        kinds.push_back(partition.kind(e));
    }
    // Coarse vertex ids survive refinement, so E and A carry over verbatim.
    return BoundaryPartition(fine, std::move(kinds), partition.singular(), partition.constraint_nodes());
}

// Inner metric -------------------------------------------------------------------

std::vector<double> inner_metric_from(const Mesh& mesh, std::size_t source) {
    if (source >= mesh.num_vertices()) throw InvalidArgument("inner_metric: vertex index out of range");
    std::vector<double> dist(mesh.num_vertices(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > dist[v]) continue;
        for (auto w : mesh.neighbors(v)) {
            const double nd = d + norm(mesh.vertex(w) - mesh.vertex(v));
            if (nd < dist[w]) {
                dist[w] = nd;
                queue.emplace(nd, w);
            }
        }
    }
    return dist;
}

double inner_metric(const Mesh& mesh, std::size_t i, std::size_t j) {
    if (i >= mesh.num_vertices() || j >= mesh.num_vertices())
        throw InvalidArgument("inner_metric: vertex index out of range");
    if (i == j) return 0.0;
    // Run from the smaller index so d(i,j) and d(j,i) share one code path bit-for-bit.
    const auto [s, t] = std::minmax(i, j);
    const double d = inner_metric_from(mesh, s)[t];
    if (!std::isfinite(d)) throw InvalidArgument("inner_metric: vertices lie in different components");
    return d;
}

// Threshold exponent ---------------------------------------------------------------

double p_threshold(Dimension frontier_of_a, Dimension singular_set) {
    constexpr int m = 2;
    for (const auto& d : {frontier_of_a, singular_set}) {
        if (d && (*d < 0 || *d > m - 1))
            throw InvalidArgument("p_threshold: declared dimension must be empty, 0 or 1 in the plane");
    }
    if (!frontier_of_a && !singular_set) return std::numeric_limits<double>::infinity();
    const int worst = std::max(frontier_of_a.value_or(-1), singular_set.value_or(-1));
    return static_cast<double>(m - worst);
}

}  // namespace sobolev
