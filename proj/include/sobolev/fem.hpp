#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "sobolev/geometry.hpp"
#include "sobolev/linalg.hpp"

namespace sobolev {

/// P1 nodal function: one finite value per mesh vertex.
///
/// Holds a non-owning reference to its mesh; the mesh must outlive the field.
class ScalarField {
public:
    ScalarField(const Mesh& mesh, std::vector<double> values);

    static ScalarField constant(const Mesh& mesh, double c);
    static ScalarField interpolate(const Mesh& mesh, const std::function<double(Point)>& fn);

    const Mesh& mesh() const noexcept { return *mesh_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(double s, const ScalarField& a);

private:
    const Mesh* mesh_;
    std::vector<double> values_;
};

/// Piecewise-constant tangent field: one 2-vector per triangle.
class VectorField {
public:
    VectorField(const Mesh& mesh, std::vector<Vec2> values);

    static VectorField constant(const Mesh& mesh, Vec2 c);
    /// Samples `fn` at triangle centroids.
    static VectorField sample(const Mesh& mesh, const std::function<Vec2(Point)>& fn);

    const Mesh& mesh() const noexcept { return *mesh_; }
    std::size_t size() const noexcept { return values_.size(); }
    Vec2 operator[](std::size_t t) const { return values_[t]; }
    std::span<const Vec2> values() const noexcept { return values_; }

    friend VectorField operator+(const VectorField& a, const VectorField& b);
    friend VectorField operator*(double s, const VectorField& a);

private:
    const Mesh* mesh_;
    std::vector<Vec2> values_;
};

/// Values attached to one boundary region: nodal values on its vertices
/// (traces) or one value per boundary edge (cotraces, Neumann data).
class BoundaryTrace {
public:
    enum class Support : std::uint8_t { Vertices, Edges };

    BoundaryTrace(const Mesh& mesh, const BoundaryPartition& partition, Region region, Support support,
                  std::vector<double> values);

    /// One value per region edge from fn(edge midpoint, outward normal).
    static BoundaryTrace edge_function(const Mesh& mesh, const BoundaryPartition& partition, Region region,
                                       const std::function<double(Point, Vec2)>& fn);
    static BoundaryTrace edge_constant(const Mesh& mesh, const BoundaryPartition& partition, Region region, double c);

    const Mesh& mesh() const noexcept { return *mesh_; }
    Region region() const noexcept { return region_; }
    Support support() const noexcept { return support_; }
    /// Vertex ids or boundary-edge ids, ascending, matching values().
    std::span<const std::size_t> indices() const noexcept { return indices_; }
    std::span<const double> values() const noexcept { return values_; }
    std::uint64_t partition_key() const noexcept { return partition_key_; }

    /// Value at a vertex or edge id of the region; throws if the id is outside it.
    double at(std::size_t id) const;

private:
    const Mesh* mesh_;
    Region region_;
    Support support_;
    std::vector<std::size_t> indices_;
    std::vector<double> values_;
    std::uint64_t partition_key_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Differential operators and pairings ------------------------------------------

/// Exact per-element gradient of the P1 interpolant.
VectorField gradient(const ScalarField& u);

/// Exact integral of the product of two P1 functions (consistent mass pairing).
double scalar_inner(const ScalarField& u, const ScalarField& v);
/// Sum over triangles of area * (beta . gamma).
double vector_inner(const VectorField& beta, const VectorField& gamma);

/// L^p norm for p in [1, inf]. Scalar fields use centroid values, except p = 2
/// which is the exact consistent-mass norm. p = inf is the largest magnitude.
double lp_norm(const ScalarField& u, double p);
double lp_norm(const VectorField& beta, double p);
/// sqrt(||u||_2^2 + ||grad u||_2^2).
double w12_norm(const ScalarField& u);

/// Nodal divergence d with <d, phi_i> = -<beta, grad phi_i> at interior hats and
/// boundary rows closing the discrete trace identity against cotrace() exactly.
ScalarField weak_divergence(const BoundaryPartition& partition, const VectorField& beta);

/// Nodal restriction of u to the vertices of a region.
BoundaryTrace trace(const BoundaryPartition& partition, const ScalarField& u, Region region);
/// beta . nu per region edge, beta taken from the edge's owning triangle.
BoundaryTrace cotrace(const BoundaryPartition& partition, const VectorField& beta, Region region);
/// Sum over region edges of length * flux * (mean of the trace at the endpoints).
double boundary_pairing(const BoundaryTrace& trace_u, const BoundaryTrace& cotrace_beta);
/// sqrt(sum over edges of length * value^2) for edge-supported data.
double boundary_l2_norm(const BoundaryTrace& edge_values);

/// <beta, grad u> + <div_beta, u> - <cotrace beta, trace u> over `region`.
double ibp_residual(const BoundaryPartition& partition, const ScalarField& u, const VectorField& beta,
                    const ScalarField& div_beta, Region region);

// Assembly ------------------------------------------------------------------------

SparseMatrix stiffness_matrix(const Mesh& mesh);
/// Stiffness with a symmetric 2x2 coefficient per element: entries area * g_i^T W g_j,
/// W stored as (w_xx, w_xy, w_yy).
SparseMatrix weighted_stiffness_matrix(const Mesh& mesh, std::span<const std::array<double, 3>> weights);
SparseMatrix mass_matrix(const Mesh& mesh);
/// Load vector of <theta, tr phi_i> for edge-constant boundary data.
Vector boundary_load(const BoundaryTrace& theta);

// Utilities ------------------------------------------------------------------------

/// L^2 distance to a smooth function, degree-4 element quadrature.
double l2_error(const ScalarField& u, const std::function<double(Point)>& exact);
/// Integral of a smooth function, degree-4 element quadrature.
double integrate(const Mesh& mesh, const std::function<double(Point)>& fn);
/// Nodal interpolation of a coarse field into refine(coarse mesh).
ScalarField prolongate(const ScalarField& coarse, const Mesh& fine);

}  // namespace sobolev
