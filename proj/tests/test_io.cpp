#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "sobolev/error.hpp"
#include "sobolev/io.hpp"
#include "sobolev/random.hpp"

using namespace sobolev;

TEST_CASE("hashing primitives") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
    CHECK(hex_digest(255) == "00000000000000ff");
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = uniform(rng, -2.0, 5.0);
        CHECK(v >= -2.0);
        CHECK(v < 5.0);
    }
}

TEST_CASE("doubles round-trip") {
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const double v = std::ldexp(uniform(rng, -1.0, 1.0), static_cast<int>(rng() % 200) - 100);
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
}

TEST_CASE("mesh JSON round-trip is bit exact") {
    const Mesh m = build_cusp(2.5, 4);
    const Json j = mesh_to_json(m);
    const Mesh back = mesh_from_json(Json::parse(j.dump()));
    CHECK(back.fingerprint() == m.fingerprint());
    REQUIRE(back.num_vertices() == m.num_vertices());
    for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(back.vertex(i) == m.vertex(i));
    CHECK(std::vector<std::size_t>(back.singular_vertices().begin(), back.singular_vertices().end()) ==
          std::vector<std::size_t>(m.singular_vertices().begin(), m.singular_vertices().end()));
    for (std::size_t e = 0; e < m.num_boundary_edges(); ++e) CHECK(back.boundary_edge(e).label == m.boundary_edge(e).label);

    Json tampered = j;
    tampered["vertices"][1][0] = 0.123;
    CHECK_THROWS_AS(mesh_from_json(tampered), InvalidArgument);
    CHECK_THROWS_AS(mesh_from_json(Json::object()), InvalidArgument);
}

TEST_CASE("field JSON") {
    const Mesh m = build_unit_square(3);
    const ScalarField u = ScalarField::interpolate(m, [](Point q) { return std::exp(q.x) / 3.0; });
    const ScalarField back = field_from_json(m, Json::parse(field_to_json(u).dump()));
    for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(back[i] == u[i]);
    const Mesh other = build_unit_square(4);
    CHECK_THROWS_AS(field_from_json(other, field_to_json(u)), InvalidArgument);
}

TEST_CASE("trace JSON") {
    const Mesh m = build_unit_square(2);
    const TagRule rules[] = {tag_everything(BoundaryKind::Neumann)};
    const BoundaryPartition part = tag_boundary(m, rules);
    const Json j = trace_to_json(BoundaryTrace::edge_constant(m, part, Region::Neumann, 2.0));
    CHECK(j["kind"] == "cotrace");
    CHECK(j["region"] == "neumann");
    CHECK(j["values"].size() == 8);
}

TEST_CASE("report CSV and summary") {
    Report r;
    r.experiment = "demo";
    r.columns = {"level", "h", "err"};
    r.rows = {{0, 0.5, 0.1}, {1, 0.25, 0.025}};
    r.checks.push_back({"ok", 1.0, 2.0, true});
    const std::string csv = report_csv(r, "abc");
    CHECK(csv == "# config_hash: abc\nlevel,h,err\n0,0.5,0.1\n1,0.25,0.025\n");
    const Json s = report_summary(r);
    CHECK(s["pass"] == true);
    CHECK(s["checks"][0]["name"] == "ok");
    r.rows.push_back({1.0});
    CHECK_THROWS_AS(report_csv(r, "abc"), InvalidArgument);
}

TEST_CASE("artifact hash detection") {
    const auto dir = std::filesystem::temp_directory_path() / ("sobolev_io_" + hex_digest(fnv1a("io-test")));
    std::filesystem::create_directories(dir);
    write_text_file(dir / "a.csv", "# config_hash: 0123\nx\n");
    write_text_file(dir / "b.json", R"({"config_hash": "4567", "x": 1})");
    write_text_file(dir / "c.txt", "plain");
    CHECK(artifact_hash(dir / "a.csv") == "0123");
    CHECK(artifact_hash(dir / "b.json") == "4567");
    CHECK(!artifact_hash(dir / "c.txt"));
    CHECK(!artifact_hash(dir / "missing"));
    CHECK(read_text_file(dir / "c.txt") == "plain");
    CHECK_THROWS_AS(read_text_file(dir / "missing"), InvalidArgument);
    std::filesystem::remove_all(dir);
}
