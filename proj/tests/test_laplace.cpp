#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sobolev/error.hpp"
#include "sobolev/laplace.hpp"
#include "sobolev/random.hpp"

using namespace sobolev;

namespace {

constexpr double kPi = std::numbers::pi;

BoundaryPartition split(const Mesh& m, std::vector<std::string> dirichlet, std::vector<std::string> neumann) {
    std::vector<TagRule> rules{tag_labels(std::move(dirichlet), BoundaryKind::Dirichlet)};
    if (!neumann.empty()) rules.push_back(tag_labels(std::move(neumann), BoundaryKind::Neumann));
    return tag_boundary(m, rules);
}

BoundaryPartition all_neumann(const Mesh& m) {
    const TagRule rules[] = {tag_everything(BoundaryKind::Neumann)};
    return tag_boundary(m, rules);
}

double spread(const ScalarField& u) {
    double lo = u[0], hi = u[0];
    for (double v : u.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

}  // namespace

TEST_CASE("constant data gives a constant solution") {
    const Mesh m = build_annulus(0.2, 1.0, 4, 24);
    const BoundaryPartition part = split(m, {"outer"}, {"inner"});
    const LaplaceSolution s = solve_mixed(MixedProblem(part, ScalarField::constant(m, 0.0), ScalarField::constant(m, 1.7)));
    for (double v : s.u.values()) CHECK(v == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(s.residual <= 1e-10);
}

TEST_CASE("affine harmonic with mixed conditions") {
    const Mesh m = build_unit_square(12);
    const BoundaryPartition part = split(m, {"left", "right"}, {"top", "bottom"});
    const LaplaceSolution s = solve_mixed(
        MixedProblem(part, ScalarField::constant(m, 0.0), ScalarField::interpolate(m, [](Point q) { return q.x; })));
    for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(std::abs(s.u[i] - m.vertex(i).x) <= 1e-10);
}

TEST_CASE("nonzero Neumann flux on part of the boundary") {
    // u = x*y: harmonic, flux on top is x, on bottom is -x.
    const Mesh m = build_unit_square(16);
    const BoundaryPartition part = split(m, {"left", "right"}, {"top", "bottom"});
    const auto exact = [](Point q) { return q.x * q.y; };
    const BoundaryTrace theta = BoundaryTrace::edge_function(
        m, part, Region::Neumann, [](Point q, Vec2 nu) { return q.y * nu.x + q.x * nu.y; });
    const LaplaceSolution s =
        solve_mixed(MixedProblem(part, ScalarField::constant(m, 0.0), ScalarField::interpolate(m, exact), theta));
    CHECK(l2_error(s.u, exact) <= 1e-3);
    CHECK(s.residual <= 1e-10);
}

TEST_CASE("manufactured problem: rate and residual") {
    std::vector<double> err;
    for (std::size_t n : {8u, 16u, 32u}) {
        const Mesh m = build_unit_square(n);
        const BoundaryPartition part = split(m, {"left", "right", "top", "bottom"}, {});
        const auto exact = [](Point q) { return std::sin(kPi * q.x) * std::sin(kPi * q.y); };
        const ScalarField g = ScalarField::interpolate(m, [&](Point q) { return -2 * kPi * kPi * exact(q); });
        const LaplaceSolution s = solve_mixed(MixedProblem(part, g, ScalarField::interpolate(m, exact)));
        CHECK(s.residual <= 1e-10);
        CHECK(weak_residual(part, s.u, g, BoundaryTrace::edge_constant(m, part, Region::Neumann, 0.0)) == s.residual);
        err.push_back(l2_error(s.u, exact));
    }
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i - 1] / err[i] == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("residual detects a perturbation") {
    const Mesh m = build_unit_square(8);
    const BoundaryPartition part = split(m, {"left", "right", "top", "bottom"}, {});
    const ScalarField g = ScalarField::constant(m, 1.0);
    const LaplaceSolution s = solve_mixed(MixedProblem(part, g, ScalarField::constant(m, 0.0)));
    std::vector<double> v(s.u.values().begin(), s.u.values().end());
    const std::size_t free = m.num_vertices() / 2;
    REQUIRE(!m.is_boundary_vertex(free));
    v[free] += 1.0 / 64.0;
    const BoundaryTrace none = BoundaryTrace::edge_constant(m, part, Region::Neumann, 0.0);
    CHECK(weak_residual(part, ScalarField(m, v), g, none) > 1e-4);
}

TEST_CASE("linearity in the load") {
    const Mesh m = build_cusp(2.0, 5);
    const BoundaryPartition part = split(m, {"right"}, {"lower", "upper"});
    Rng rng(derive_seed(12, "linearity"));
    std::vector<double> a(m.num_vertices()), b(m.num_vertices());
    for (auto& x : a) x = uniform(rng, -1, 1);
    for (auto& x : b) x = uniform(rng, -1, 1);
    const ScalarField g1(m, a), g2(m, b), zero = ScalarField::constant(m, 0.0);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return q.y + 1; });
    const ScalarField u12 = solve_mixed(MixedProblem(part, g1 + g2, f)).u;
    const ScalarField u1 = solve_mixed(MixedProblem(part, g1, f)).u;
    const ScalarField u2 = solve_mixed(MixedProblem(part, g2, zero)).u;
    CHECK(w12_norm(u12 - u1 - u2) <= 1e-9);
}

TEST_CASE("uniqueness from different starting points") {
    const Mesh m = build_annulus(0.1, 1.0, 8, 32);
    const BoundaryPartition part = split(m, {"inner"}, {"outer"});
    const MixedProblem prob(part, ScalarField::interpolate(m, [](Point q) { return q.x; }),
                            ScalarField::interpolate(m, [](Point q) { return q.y; }));
    const ScalarField a = solve_mixed(prob).u;
    LinearSolveOptions opts;
    opts.initial_guess = std::vector<double>(m.num_vertices(), 100.0);
    CHECK(w12_norm(a - solve_mixed(prob, opts).u) <= 1e-9);
    opts.initial_guess = std::vector<double>(3, 0.0);
    CHECK_THROWS_AS(solve_mixed(prob, opts), InvalidArgument);
}

TEST_CASE("mixed problem validation") {
    const Mesh m = build_unit_square(4);
    CHECK_THROWS_AS(MixedProblem(all_neumann(m), ScalarField::constant(m, 0.0), ScalarField::constant(m, 0.0)),
                    InvalidArgument);
    const Mesh other = build_unit_square(5);
    const BoundaryPartition part = split(m, {"left"}, {"right", "top", "bottom"});
    CHECK_THROWS_AS(MixedProblem(part, ScalarField::constant(other, 0.0), ScalarField::constant(m, 0.0)),
                    InvalidArgument);
}

TEST_CASE("compatibility defect") {
    const Mesh m = build_unit_square(6);
    const BoundaryPartition part = all_neumann(m);
    const ScalarField zero = ScalarField::constant(m, 0.0), one = ScalarField::constant(m, 1.0);
    const BoundaryTrace t0 = BoundaryTrace::edge_constant(m, part, Region::Whole, 0.0);
    const BoundaryTrace t1 = BoundaryTrace::edge_constant(m, part, Region::Whole, 1.0);
    CHECK(compatibility_defect(zero, t0) == 0.0);
    CHECK(compatibility_defect(one, t0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(compatibility_defect(zero, t1) == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("pure Neumann") {
    const Mesh m = build_unit_square(16);
    const BoundaryPartition part = all_neumann(m);
    SUBCASE("zero data") {
        const LaplaceSolution s =
            solve_neumann(NeumannProblem(ScalarField::constant(m, 0.0), BoundaryTrace::edge_constant(m, part, Region::Whole, 0.0)));
        for (double v : s.u.values()) CHECK(v == 0.0);
    }
    SUBCASE("incompatible data is rejected") {
        try {
            solve_neumann(NeumannProblem(ScalarField::constant(m, 1.0), BoundaryTrace::edge_constant(m, part, Region::Whole, 0.0)));
            FAIL("expected CompatibilityError");
        } catch (const CompatibilityError& e) {
            CHECK(e.defect() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::string(e.what()).find("compatibility") != std::string::npos);
        }
    }
    SUBCASE("harmonic polynomial and gauges") {
        const auto w = [](Point q) { return q.x * q.x - q.y * q.y; };
        const BoundaryTrace theta = BoundaryTrace::edge_function(
            m, part, Region::Whole, [](Point q, Vec2 nu) { return 2 * q.x * nu.x - 2 * q.y * nu.y; });
        const NeumannProblem prob(ScalarField::constant(m, 0.0), theta);
        const LaplaceSolution s = solve_neumann(prob);
        CHECK(std::abs(scalar_inner(s.u, ScalarField::constant(m, 1.0))) <= 1e-13);
        // the mean of x^2 - y^2 over the square vanishes
        CHECK(l2_error(s.u, w) <= 2e-3);
        const LaplaceSolution pinned = solve_neumann(prob, {}, NeumannGauge::PinFirstVertex);
        CHECK(pinned.u[0] == 0.0);
        CHECK(spread(s.u - pinned.u) <= 1e-9);
    }
    SUBCASE("stiffness kernel is the constants") {
        const Vector ones = Vector::Ones(static_cast<Eigen::Index>(m.num_vertices()));
        CHECK((stiffness_matrix(m) * ones).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("neumann problem validation") {
    const Mesh m = build_unit_square(3);
    const BoundaryPartition part = split(m, {"left"}, {"right", "top", "bottom"});
    CHECK_THROWS_AS(NeumannProblem(ScalarField::constant(m, 0.0), BoundaryTrace::edge_constant(m, part, Region::Neumann, 0.0)),
                    InvalidArgument);
}
