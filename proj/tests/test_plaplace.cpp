#include <doctest.h>

#include <cmath>

#include "sobolev/error.hpp"
#include "sobolev/laplace.hpp"
#include "sobolev/plaplace.hpp"

using namespace sobolev;

namespace {

BoundaryPartition split(const Mesh& m, std::vector<std::string> dirichlet, std::vector<std::string> neumann) {
    std::vector<TagRule> rules{tag_labels(std::move(dirichlet), BoundaryKind::Dirichlet)};
    if (!neumann.empty()) rules.push_back(tag_labels(std::move(neumann), BoundaryKind::Neumann));
    return tag_boundary(m, rules);
}

BoundaryPartition whole(const Mesh& m) {
    const TagRule rules[] = {tag_everything(BoundaryKind::Dirichlet)};
    return tag_boundary(m, rules);
}

std::vector<std::size_t> all_vertices(const Mesh& m) {
    std::vector<std::size_t> v(m.num_vertices());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
}

}  // namespace

TEST_CASE("sharp_p") {
    const Mesh m = build_rectangle({0, 0}, {2, 1}, 3, 2);
    const VectorField beta = VectorField::sample(m, [](Point q) { return Vec2{q.x - q.y, q.x * q.y}; });
    const VectorField same = sharp_p(beta, 2.0);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(same[t] == beta[t]);

    const double area = 2.0;
    for (double p : {1.5, 3.0, 6.0}) {
        const VectorField c = sharp_p(VectorField::constant(m, {0.3, -0.4}), p);
        const double factor = std::pow(area, -(p - 2.0) / p);
        for (auto v : c.values()) {
            CHECK(v.x == doctest::Approx(0.3 * factor));
            CHECK(v.y == doctest::Approx(-0.4 * factor));
        }
        const VectorField zero = sharp_p(VectorField::constant(m, {0, 0}), p);
        for (auto v : zero.values()) CHECK(v == Vec2{});
        // degree-one homogeneity
        const VectorField scaled = sharp_p(3.5 * beta, p), base = sharp_p(beta, p);
        for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(norm(scaled[t] - 3.5 * base[t]) <= 1e-12);
    }
    CHECK_THROWS_AS(sharp_p(beta, 1.0), InvalidArgument);
}

TEST_CASE("p energy") {
    const Mesh m = build_unit_square(5);
    const ScalarField x = ScalarField::interpolate(m, [](Point q) { return q.x; });
    const ScalarField u = ScalarField::interpolate(m, [](Point q) { return std::sin(q.x + 2 * q.y); });
    for (double p : {1.0, 2.0, 3.7, 10.0}) {
        CHECK(p_energy(ScalarField::constant(m, 2.0), p) == 0.0);
        CHECK(p_energy(x, p) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(p_energy(-2.5 * u, p) == doctest::Approx(2.5 * p_energy(u, p)).epsilon(1e-13));
    }
}

TEST_CASE("fully constrained problem returns the datum") {
    const Mesh m = build_unit_square(3);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return q.x * q.y; });
    const PlapSolution s = solve_p_laplace(PlapProblem(f, all_vertices(m), 4.0));
    for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(s.u[i] == f[i]);
    CHECK(s.report.iterations == 0);
}

TEST_CASE("affine data is p-harmonic") {
    const Mesh m = build_unit_square(10);
    const BoundaryPartition part = split(m, {"left", "right"}, {"top", "bottom"});
    const auto& a = part.vertices(Region::Dirichlet);
    const ScalarField x = ScalarField::interpolate(m, [](Point q) { return q.x; });
    for (double p : {1.5, 2.0, 3.0, 4.0, 6.0, 10.0}) {
        CHECK(p_stationarity(x, p, a) <= 1e-10);
        const PlapSolution s = solve_p_laplace(PlapProblem(x, a, p));
        for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(std::abs(s.u[i] - x[i]) <= 1e-6);
        CHECK(s.report.energy == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("stationarity detects a nonzero Laplacian") {
    const Mesh m = build_unit_square(8);
    const BoundaryPartition part = whole(m);
    const ScalarField u = ScalarField::interpolate(m, [](Point q) { return q.x * q.x; });
    CHECK(p_stationarity(u, 2.0, part.vertices(Region::Dirichlet)) > 1e-3);
    CHECK(p_stationarity(ScalarField::constant(m, 1.0), 3.0, part.vertices(Region::Dirichlet)) == 0.0);
}

TEST_CASE("p = 2 agrees with the linear solver") {
    const Mesh m = build_annulus(0.3, 1.0, 5, 24);
    const BoundaryPartition part = whole(m);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return q.x * q.x + q.y; });
    PlapOptions opt;
    opt.eps_final = 0.0;
    const PlapSolution s = solve_p_laplace(PlapProblem(f, part.vertices(Region::Dirichlet), 2.0, opt));
    const LaplaceSolution l = solve_mixed(MixedProblem(part, ScalarField::constant(m, 0.0), f));
    CHECK(w12_norm(s.u - l.u) <= 1e-9);
}

TEST_CASE("solver output is stationary, monotone and certified") {
    const Mesh m = build_unit_square(10);
    const BoundaryPartition part = whole(m);
    const auto& a = part.vertices(Region::Dirichlet);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return std::sin(3 * q.x) * q.y + q.x * q.x; });
    for (double p : {1.6, 3.0, 8.0}) {
        PlapOptions opt;
        opt.tol = 1e-10;
        const PlapSolution s = solve_p_laplace(PlapProblem(f, a, p, opt));
        CHECK(s.report.stationarity <= 1e-10);
        CHECK(s.report.energy <= p_energy(f, p));
        for (const auto& stage : s.report.stages)
            for (std::size_t k = 1; k < stage.energies.size(); ++k) CHECK(stage.energies[k] <= stage.energies[k - 1]);
        CHECK(s.report.stages.back().p == p);
        const OptimalityReport cert = minimality_certificate(s.u, p, a, 50, 17);
        REQUIRE(cert.certificate);
        CHECK(cert.certificate->passed);
        CHECK(cert.certificate->trials == 50);
        // maximum principle surrogate on the nonobtuse grid
        REQUIRE(m.is_nonobtuse());
        double lo = f[a[0]], hi = lo;
        for (auto i : a) {
            lo = std::min(lo, f[i]);
            hi = std::max(hi, f[i]);
        }
        for (double v : s.u.values()) {
            CHECK(v >= lo - 1e-9);
            CHECK(v <= hi + 1e-9);
        }
    }
}

TEST_CASE("unoptimized data fails the certificate") {
    const Mesh m = build_unit_square(8);
    const BoundaryPartition part = whole(m);
    const auto& a = part.vertices(Region::Dirichlet);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return std::exp(q.x) * q.y * q.y; });
    const OptimalityReport cert = minimality_certificate(f, 4.0, a, 30, 5);
    CHECK(!cert.certificate->passed);
    CHECK(cert.certificate->violations > 0);

    const ScalarField zero = ScalarField::constant(m, 0.0);
    const OptimalityReport flat = minimality_certificate(f, 4.0, a, std::span<const ScalarField>(&zero, 1));
    CHECK(flat.certificate->passed);
    CHECK(flat.certificate->worst_margin == 0.0);

    const ScalarField bad = ScalarField::constant(m, 1.0);
    CHECK_THROWS_AS(minimality_certificate(f, 4.0, a, std::span<const ScalarField>(&bad, 1)), InvalidArgument);
}

TEST_CASE("seeds and schedules do not change the minimizer") {
    const Mesh m = build_unit_square(8);
    const BoundaryPartition part = whole(m);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return q.x * q.y * q.y - q.y; });
    PlapOptions a, b, c;
    a.seed = 3;
    b.seed = 99;
    c.continuation_factor = 1.2;
    c.linearization = Linearization::Kacanov;
    c.max_outer = 2000;  // plain reweighting converges linearly
    const auto& verts = part.vertices(Region::Dirichlet);
    const ScalarField ua = solve_p_laplace(PlapProblem(f, verts, 4.0, a)).u;
    CHECK(w12_norm(ua - solve_p_laplace(PlapProblem(f, verts, 4.0, b)).u) <= 1e-6);
    CHECK(w12_norm(ua - solve_p_laplace(PlapProblem(f, verts, 4.0, c)).u) <= 1e-6);
}

TEST_CASE("interior constraint points") {
    const Mesh m = build_unit_square(8);
    const BoundaryPartition part = split(m, {"left"}, {"right", "top", "bottom"});
    std::vector<std::size_t> a = part.vertices(Region::Dirichlet);
    std::size_t centre = 0;
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
        if (m.vertex(v) == Point{0.5, 0.5}) centre = v;
    a.push_back(centre);
    std::vector<double> data(m.num_vertices(), 0.0);
    data[centre] = 1.0;
    const PlapSolution s = solve_p_laplace(PlapProblem(ScalarField(m, data), a, 3.0));
    CHECK(s.u[centre] == 1.0);
    CHECK(s.report.stationarity <= 1e-10);
    for (double v : s.u.values()) CHECK(v >= -1e-9);
}

TEST_CASE("failure carries the best iterate") {
    const Mesh m = build_unit_square(8);
    const BoundaryPartition part = whole(m);
    const ScalarField f = ScalarField::interpolate(m, [](Point q) { return std::sin(5 * q.x) * std::cos(4 * q.y); });
    PlapOptions opt;
    opt.max_outer = 1;
    opt.tol = 1e-30;  // below the roundoff floor of the stationarity measure
    try {
        solve_p_laplace(PlapProblem(f, part.vertices(Region::Dirichlet), 12.0, opt));
        FAIL("expected PlapConvergenceError");
    } catch (const PlapConvergenceError& e) {
        CHECK(e.best_iterate().size() == m.num_vertices());
        CHECK(e.residual() > 1e-30);
    }
}

TEST_CASE("problem validation") {
    const Mesh m = build_unit_square(2);
    const ScalarField f = ScalarField::constant(m, 0.0);
    CHECK_THROWS_AS(PlapProblem(f, {}, 3.0), InvalidArgument);
    CHECK_THROWS_AS(PlapProblem(f, {0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(PlapProblem(f, {99}, 3.0), InvalidArgument);
    PlapOptions opt;
    opt.eps_final = -1.0;
    CHECK_THROWS_AS(PlapProblem(f, {0}, 3.0, opt), InvalidArgument);
    opt.eps_final = 0.0;
    opt.continuation_factor = 2.0;
    CHECK_THROWS_AS(PlapProblem(f, {0}, 3.0, opt), InvalidArgument);
    CHECK(PlapProblem(f, {3, 1, 3}, 3.0).constraint() == std::vector<std::size_t>{1, 3});
}
