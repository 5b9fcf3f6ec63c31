#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "sobolev/error.hpp"
#include "sobolev/geometry.hpp"
#include "sobolev/random.hpp"

using namespace sobolev;

namespace {

double polygon_area(const Mesh& m) {
    double a = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) a += m.area(t);
    return a;
}

// Directed edge multiset check: every interior edge appears once in each direction.
bool orientation_consistent(const Mesh& m) {
    std::map<std::pair<std::size_t, std::size_t>, int> count;
    for (const auto& t : m.triangles())
        for (int i = 0; i < 3; ++i) ++count[{t[i], t[(i + 1) % 3]}];
    std::size_t boundary = 0;
    for (const auto& [e, c] : count) {
        if (c != 1) return false;
        if (!count.count({e.second, e.first})) ++boundary;
    }
    return boundary == m.num_boundary_edges();
}

}  // namespace

TEST_CASE("unit square counts") {
    const Mesh m1 = build_unit_square(1);
    CHECK(m1.num_vertices() == 4);
    CHECK(m1.num_triangles() == 2);
    CHECK(m1.num_boundary_edges() == 4);
    for (std::size_t n : {2u, 3u, 7u}) {
        const Mesh m = build_unit_square(n);
        CHECK(m.num_vertices() == (n + 1) * (n + 1));
        CHECK(m.num_triangles() == 2 * n * n);
        CHECK(m.num_boundary_edges() == 4 * n);
        CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(build_unit_square(0), InvalidArgument);
}

TEST_CASE("generated meshes are consistently oriented") {
    CHECK(orientation_consistent(build_unit_square(5)));
    CHECK(orientation_consistent(build_rectangle({-1, 0}, {2, 1}, 6, 3)));
    CHECK(orientation_consistent(build_annulus(0.1, 1.0, 4, 16)));
    CHECK(orientation_consistent(build_cusp(2.0, 5)));
    CHECK(orientation_consistent(refine(build_cusp(3.0, 4))));
}

TEST_CASE("boundary normals point outward on the square") {
    const Mesh m = build_unit_square(3);
    for (std::size_t e = 0; e < m.num_boundary_edges(); ++e) {
        const auto& be = m.boundary_edge(e);
        const Vec2 nu = m.normal(e);
        const Point mid = 0.5 * (m.vertex(be.a) + m.vertex(be.b));
        CHECK(norm(nu) == doctest::Approx(1.0));
        if (be.label == "left") CHECK(nu.x == doctest::Approx(-1.0));
        if (be.label == "right") CHECK(nu.x == doctest::Approx(1.0));
        if (be.label == "bottom") CHECK(nu.y == doctest::Approx(-1.0));
        if (be.label == "top") CHECK(nu.y == doctest::Approx(1.0));
        CHECK(dot(nu, mid - Point{0.5, 0.5}) > 0.0);
    }
}

TEST_CASE("mesh validation") {
    const std::vector<Point> v = {{0, 0}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS(Mesh(v, {{0, 2, 1}}, {{0, 1, "b"}, {1, 2, "b"}, {2, 0, "b"}}), InvalidArgument);
    CHECK_THROWS_AS(Mesh(v, {{0, 1, 2}}, {{0, 1, "b"}, {1, 2, "b"}}), InvalidArgument);
    CHECK_NOTHROW(Mesh(v, {{0, 1, 2}}, {{0, 1, "b"}, {1, 2, "b"}, {2, 0, "b"}}));
    CHECK_THROWS_AS(Mesh({{0, 0}, {1, 0}, {2, 0}}, {{0, 1, 2}}, {}), InvalidArgument);
}

TEST_CASE("annulus area approaches the disk ring from below") {
    const double exact = std::numbers::pi * (1.0 - 0.04);
    double previous = 0.0;
    for (std::size_t n : {16u, 32u, 64u, 128u}) {
        const Mesh m = build_annulus(0.2, 1.0, 6, n);
        CHECK(m.total_area() < exact);
        CHECK(m.total_area() > previous);
        previous = m.total_area();
        std::size_t inner = 0, outer = 0;
        for (const auto& e : m.boundary_edges()) (e.label == "inner" ? inner : outer)++;
        CHECK(inner == n);
        CHECK(outer == n);
    }
    CHECK(previous == doctest::Approx(exact).epsilon(1e-3));
    CHECK_THROWS_AS(build_annulus(0.0, 1.0, 4, 16), InvalidArgument);
    CHECK_THROWS_AS(build_annulus(0.2, 1.0, 4, 2), InvalidArgument);
}

TEST_CASE("cusp area is 1/(k+1)") {
    for (double k : {1.0, 2.0, 3.0, 4.5}) {
        Mesh m = build_cusp(k, 8);
        m = refine(m);
        CHECK(std::abs(m.total_area() - 1.0 / (k + 1.0)) <= 0.01 / (k + 1.0));
    }
    CHECK_THROWS_AS(build_cusp(0.5, 4), InvalidArgument);
    CHECK_THROWS_AS(build_cusp(2.0, 1), InvalidArgument);
}

TEST_CASE("cusp tip is singular") {
    const Mesh m = build_cusp(3.0, 5);
    REQUIRE(m.singular_vertices().size() == 1);
    const std::size_t tip = m.singular_vertices()[0];
    CHECK(m.vertex(tip) == Point{0, 0});
    const TagRule rules[] = {tag_everything(BoundaryKind::Dirichlet)};
    const BoundaryPartition part = tag_boundary(m, rules);
    CHECK(std::find(part.singular().begin(), part.singular().end(), tip) != part.singular().end());
}

TEST_CASE("tagging") {
    const Mesh m = build_unit_square(4);
    SUBCASE("everything Dirichlet") {
        const TagRule rules[] = {tag_everything(BoundaryKind::Dirichlet)};
        const BoundaryPartition part = tag_boundary(m, rules);
        CHECK(part.edges(Region::Neumann).empty());
        CHECK(part.singular().empty());
        CHECK(part.edges(Region::Whole).size() == 16);
        CHECK(part.vertices(Region::Dirichlet).size() == 16);
    }
    SUBCASE("left edge Dirichlet") {
        const TagRule rules[] = {tag_labels({"left"}, BoundaryKind::Dirichlet),
                                 tag_labels({"right", "top", "bottom"}, BoundaryKind::Neumann)};
        const BoundaryPartition part = tag_boundary(m, rules);
        std::set<std::pair<double, double>> corners;
        for (auto v : part.singular()) corners.insert({m.vertex(v).x, m.vertex(v).y});
        CHECK(corners == std::set<std::pair<double, double>>{{0.0, 0.0}, {0.0, 1.0}});
        CHECK(part.vertices(Region::Dirichlet).size() == 5);
    }
    SUBCASE("overlap and gaps are rejected") {
        const TagRule overlap[] = {tag_labels({"left", "top"}, BoundaryKind::Dirichlet),
                                   tag_everything(BoundaryKind::Neumann)};
        CHECK_THROWS_AS(tag_boundary(m, overlap), InvalidArgument);
        const TagRule gap[] = {tag_labels({"left"}, BoundaryKind::Dirichlet)};
        CHECK_THROWS_AS(tag_boundary(m, gap), InvalidArgument);
    }
}

TEST_CASE("refinement") {
    const Mesh coarse = build_annulus(0.3, 1.0, 3, 12);
    const Mesh fine = refine(coarse);
    CHECK(fine.num_triangles() == 4 * coarse.num_triangles());
    CHECK(fine.num_boundary_edges() == 2 * coarse.num_boundary_edges());
    CHECK(polygon_area(fine) == doctest::Approx(polygon_area(coarse)).epsilon(1e-14));
    for (std::size_t i = 0; i < coarse.num_vertices(); ++i) CHECK(fine.vertex(i) == coarse.vertex(i));
    for (std::size_t e = 0; e < coarse.num_boundary_edges(); ++e) {
        CHECK(fine.boundary_edge(2 * e).label == coarse.boundary_edge(e).label);
        CHECK(fine.boundary_edge(2 * e + 1).label == coarse.boundary_edge(e).label);
    }
    const TagRule rules[] = {tag_labels({"inner"}, BoundaryKind::Neumann), tag_labels({"outer"}, BoundaryKind::Dirichlet)};
    const BoundaryPartition cp = tag_boundary(coarse, rules);
    const BoundaryPartition fp = refine(cp, coarse, fine);
    for (std::size_t e = 0; e < coarse.num_boundary_edges(); ++e) {
        CHECK(fp.kind(2 * e) == cp.kind(e));
        CHECK(fp.kind(2 * e + 1) == cp.kind(e));
    }
    for (auto v : cp.singular()) CHECK(std::count(fp.singular().begin(), fp.singular().end(), v) == 1);
}

TEST_CASE("inner metric") {
    const Mesh m = refine(build_unit_square(8));
    CHECK(inner_metric(m, 5, 5) == 0.0);
    Rng rng(derive_seed(1, "metric-test"));
    const auto pick = [&] { return static_cast<std::size_t>(rng() % m.num_vertices()); };
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t i = pick(), j = pick(), k = pick();
        const double dij = inner_metric(m, i, j);
        const double euclid = norm(m.vertex(i) - m.vertex(j));
        CHECK(dij >= euclid - 1e-15);
        CHECK(dij == inner_metric(m, j, i));
        CHECK(dij <= inner_metric(m, i, k) + inner_metric(m, k, j) + 1e-14);
        if (i != j) CHECK(dij > 0.0);
    }
    // Diagonal edges run along (1,1): paths aligned with them are exact.
    const auto corner = [&](double x, double y) {
        for (std::size_t v = 0; v < m.num_vertices(); ++v)
            if (m.vertex(v) == Point{x, y}) return v;
        return m.num_vertices();
    };
    CHECK(inner_metric(m, corner(0, 0), corner(1, 1)) == doctest::Approx(std::sqrt(2.0)));
    // Along the anti-diagonal the edge graph needs axis-aligned detours.
    const double anti = inner_metric(m, corner(1, 0), corner(0, 1));
    CHECK(anti == doctest::Approx(2.0));
}

TEST_CASE("inner metric on a convex mesh stays close to euclidean along diagonals") {
    const Mesh m = refine(build_unit_square(8));
    Rng rng(derive_seed(2, "metric-ratio"));
    int within = 0, total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t i = rng() % m.num_vertices(), j = rng() % m.num_vertices();
        const Vec2 d = m.vertex(j) - m.vertex(i);
        if (i == j || d.x * d.y <= 0.0) continue;  // the grid diagonals only help in the (1,1) quadrant
        ++total;
        within += inner_metric(m, i, j) <= 1.1 * norm(d) + 1e-12 ? 1 : 0;
    }
    CHECK(total > 50);
    // Paths are chained axis and diagonal steps: the worst ratio is (sqrt2-1+1)/|(1, tan 22.5)| ~ 1.082.
    CHECK(within == total);
}

TEST_CASE("p threshold") {
    CHECK(std::isinf(p_threshold(std::nullopt, std::nullopt)));
    CHECK(p_threshold(0, std::nullopt) == 2.0);
    CHECK(p_threshold(std::nullopt, 0) == 2.0);
    CHECK(p_threshold(1, std::nullopt) == 1.0);
    CHECK_THROWS_AS(p_threshold(2, std::nullopt), InvalidArgument);
    const Dimension dims[] = {std::nullopt, 0, 1};
    for (auto a : dims)
        for (std::size_t s = 0; s + 1 < 3; ++s) CHECK(p_threshold(a, dims[s + 1]) <= p_threshold(a, dims[s]));
}
