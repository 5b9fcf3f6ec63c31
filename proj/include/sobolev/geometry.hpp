#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sobolev {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

using Point = Vec2;
using Triangle = std::array<std::size_t, 3>;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Boundary edge oriented so the domain lies on its left (counterclockwise outer loop).
/// The label is a geometric name ("left", "inner", ...) assigned by the generator.
struct BoundaryEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    std::string label;
};

/// Conforming planar triangulation with cached element and boundary geometry.
///
/// Immutable after construction. Construction validates: counterclockwise
/// triangles of positive area, consistent orientation (every interior edge is
/// used once in each direction), boundary edges matching exactly the edges
/// owned by a single triangle, and closed boundary loops.
class Mesh {
public:
    Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
         std::vector<BoundaryEdge> boundary, std::vector<std::size_t> singular_vertices = {});

    /// Derives the boundary from the triangles; `labeler` names each boundary edge.
    static Mesh from_triangles(std::vector<Point> vertices, std::vector<Triangle> triangles,
                               const std::function<std::string(Point, Point)>& labeler,
                               std::vector<std::size_t> singular_vertices = {});

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_triangles() const noexcept { return triangles_.size(); }
    std::size_t num_boundary_edges() const noexcept { return boundary_.size(); }

    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    std::span<const Point> vertices() const noexcept { return vertices_; }
    const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
    std::span<const Triangle> triangles() const noexcept { return triangles_; }

    double area(std::size_t t) const { return areas_[t]; }
    double total_area() const noexcept { return total_area_; }
    Point centroid(std::size_t t) const;
    /// Gradients of the three barycentric coordinates of triangle t.
    const std::array<Vec2, 3>& shape_gradients(std::size_t t) const { return shape_grads_[t]; }

    const BoundaryEdge& boundary_edge(std::size_t e) const { return boundary_[e]; }
    std::span<const BoundaryEdge> boundary_edges() const noexcept { return boundary_; }
    Vec2 normal(std::size_t e) const { return normals_[e]; }
    double edge_length(std::size_t e) const { return lengths_[e]; }
    /// The unique triangle owning boundary edge e.
    std::size_t boundary_triangle(std::size_t e) const { return boundary_tri_[e]; }
    bool is_boundary_vertex(std::size_t v) const { return on_boundary_[v] != 0; }

    /// Declared singular frontier vertices (the discrete M_sigma), sorted.
    std::span<const std::size_t> singular_vertices() const noexcept { return singular_; }

    /// Edge-graph neighbours of vertex v, ascending.
    std::span<const std::size_t> neighbors(std::size_t v) const;

    double max_edge_length() const noexcept { return h_max_; }
    /// True when no interior angle exceeds a right angle (up to `tol` radians).
    bool is_nonobtuse(double tol = 1e-12) const;

    /// 64-bit FNV-1a digest of vertex coordinates and connectivity.
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<std::size_t> singular_;

    std::vector<double> areas_;
    std::vector<std::array<Vec2, 3>> shape_grads_;
    std::vector<Vec2> normals_;
    std::vector<double> lengths_;
    std::vector<std::size_t> boundary_tri_;
    std::vector<std::uint8_t> on_boundary_;
    std::vector<std::size_t> adj_offsets_;
    std::vector<std::size_t> adj_;
    double total_area_ = 0.0;
    double h_max_ = 0.0;
    std::uint64_t fingerprint_ = 0;
};

enum class BoundaryKind : std::uint8_t { Dirichlet, Neumann };

/// Selects a part of the boundary: Gamma_D, Gamma_N, or all of it.
enum class Region : std::uint8_t { Dirichlet, Neumann, Whole };

std::string_view to_string(BoundaryKind kind);
std::string_view to_string(Region region);
Region parse_region(std::string_view name);

/// Disjoint Dirichlet/Neumann tagging of a mesh boundary plus the singular set E.
///
/// E is the union of the mesh's declared singular vertices, caller-declared
/// extras, and every vertex where the tag changes along a boundary loop.
class BoundaryPartition {
public:
    BoundaryPartition(const Mesh& mesh, std::vector<BoundaryKind> kinds,
                      std::vector<std::size_t> extra_singular = {},
                      std::vector<std::size_t> constraint_nodes = {});

    std::size_t num_edges() const noexcept { return kinds_.size(); }
    BoundaryKind kind(std::size_t e) const { return kinds_[e]; }
    bool in_region(std::size_t e, Region region) const;

    /// Boundary edge indices of the region, ascending.
    const std::vector<std::size_t>& edges(Region region) const;
    /// Vertices touched by the region's edges, ascending.
    const std::vector<std::size_t>& vertices(Region region) const;

    const std::vector<std::size_t>& singular() const noexcept { return singular_; }
    const std::vector<std::size_t>& constraint_nodes() const noexcept { return constraint_; }
    std::uint64_t mesh_fingerprint() const noexcept { return mesh_fingerprint_; }
    /// Digest of the mesh fingerprint and the edge tags.
    std::uint64_t key() const noexcept { return key_; }

private:
    std::vector<BoundaryKind> kinds_;
    std::array<std::vector<std::size_t>, 3> edges_;
    std::array<std::vector<std::size_t>, 3> vertices_;
    std::vector<std::size_t> singular_;
    std::vector<std::size_t> constraint_;
    std::uint64_t mesh_fingerprint_ = 0;
    std::uint64_t key_ = 0;
};

/// What a tagging predicate sees of one boundary edge.
struct EdgeView {
    std::size_t index;
    Point a;
    Point b;
    Point midpoint;
    std::string_view label;
};

struct TagRule {
    std::string name;
    std::function<bool(const EdgeView&)> predicate;
    BoundaryKind kind;
};

TagRule tag_labels(std::vector<std::string> labels, BoundaryKind kind);
TagRule tag_everything(BoundaryKind kind);

/// Applies the rules; every edge must be matched by exactly one rule.
BoundaryPartition tag_boundary(const Mesh& mesh, std::span<const TagRule> rules,
                               std::vector<std::size_t> constraint_nodes = {});

// Generators ---------------------------------------------------------------

/// Structured grid of [x0,x1]x[y0,y1] split along the (lower-left, upper-right) diagonals.
/// Labels: "left", "right", "bottom", "top".
Mesh build_rectangle(Point lower_left, Point upper_right, std::size_t nx, std::size_t ny);
Mesh build_unit_square(std::size_t n);

enum class RadialGrading : std::uint8_t { Uniform, Geometric };

/// Polar grid between radii r_in < r_out. Labels: "inner", "outer".
Mesh build_annulus(double r_in, double r_out, std::size_t n_radial, std::size_t n_angular,
                   RadialGrading grading = RadialGrading::Geometric);

/// The cusp {0 < x < 1, |y| < x^k / 2} with its tip at the origin declared singular.
/// Labels: "lower", "upper", "right".
Mesh build_cusp(double k, std::size_t n, double grading_ratio = 0.7);

struct DomainSpec {
    enum class Kind : std::uint8_t { UnitSquare, Rectangle, Annulus, Cusp };
    Kind kind = Kind::UnitSquare;
    std::size_t n = 4;
    double width = 1.0;
    double height = 1.0;
    double r_in = 0.1;
    double r_out = 1.0;
    std::size_t n_radial = 8;
    std::size_t n_angular = 32;
    double k = 2.0;
    double grading_ratio = 0.7;
    std::optional<std::uint64_t> seed;  // reserved for perturbed meshes; generators are deterministic
};

Mesh build_domain(const DomainSpec& spec);

/// Red refinement: each triangle becomes four similar children. Coarse vertices
/// keep their indices; edge midpoints follow in the order given by
/// refinement_parents(). Boundary edge e becomes edges 2e and 2e+1.
Mesh refine(const Mesh& mesh);
std::vector<std::array<std::size_t, 2>> refinement_parents(const Mesh& mesh);
BoundaryPartition refine(const BoundaryPartition& partition, const Mesh& coarse, const Mesh& fine);

// Inner metric ---------------------------------------------------------------

/// Shortest edge-path lengths from `source` to every vertex (infinity if unreachable).
std::vector<double> inner_metric_from(const Mesh& mesh, std::size_t source);
double inner_metric(const Mesh& mesh, std::size_t i, std::size_t j);

// Threshold exponent ---------------------------------------------------------

/// Dimension of a (possibly empty) subset of the frontier; nullopt encodes dim(empty) = -inf.
using Dimension = std::optional<int>;

/// p_M(A) = 2 - max(dim(cl A minus its regular interior), dim M_sigma); +inf when both are empty.
double p_threshold(Dimension frontier_of_a, Dimension singular_set);

}  // namespace sobolev
