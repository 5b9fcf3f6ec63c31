#include <doctest.h>

#include <filesystem>

#include "sobolev/cli.hpp"
#include "sobolev/io.hpp"
#include "sobolev/random.hpp"

using namespace sobolev;
using namespace sobolev::cli;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag)
        : path(std::filesystem::temp_directory_path() / ("sobolev_cli_" + tag + "_" + hex_digest(fnv1a(tag)))) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str(const std::string& name) const { return (path / name).string(); }
};

std::string write_config(const TempDir& dir, const std::string& name, const std::string& body) {
    write_text_file(dir.path / name, body);
    return dir.str(name);
}

}  // namespace

TEST_CASE("minimal mesh config") {
    const RunConfig cfg = config_from_json(Json::parse(R"({"command": "mesh", "domain": {"kind": "unit_square", "n": 4}})"));
    CHECK(cfg.command == "mesh");
    CHECK(cfg.domain.n == 4);
    CHECK(cfg.warnings.empty());
}

TEST_CASE("schema errors name the field") {
    const auto field_of = [](const char* text) {
        try {
            config_from_json(Json::parse(text));
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of(R"({"command": "solve-plap", "p": 0.5})") == "p");
    CHECK(field_of(R"({"command": "fly"})") == "command");
    CHECK(field_of(R"({"command": "sweep", "sweep": {"p": []}})") == "sweep.p");
    CHECK(field_of(R"({"command": "mesh", "domain": {"kind": "torus"}})") == "domain.kind");
    CHECK(field_of(R"({"command": "mesh", "seed": -3})") == "seed");
    CHECK(field_of(R"({"command": "solve-laplace", "data": {"f": "nonsense"}})") == "data.f");
    CHECK(field_of(R"({"command": "verify"})") == "experiment");
}

TEST_CASE("unknown keys warn") {
    const RunConfig cfg = config_from_json(Json::parse(R"({"command": "mesh", "colour": "blue"})"));
    REQUIRE(cfg.warnings.size() == 1);
    CHECK(cfg.warnings[0].find("colour") != std::string::npos);
}

TEST_CASE("flags override the file") {
    TempDir dir("flags");
    const std::string path = write_config(dir, "c.json", R"({"command": "solve-plap", "p": 4, "seed": 1})");
    const RunConfig cfg = parse_config({"--config", path, "--p", "6", "--seed", "9"});
    CHECK(cfg.p == 6.0);
    CHECK(cfg.seed == 9);
    CHECK(parse_config({"--config", path}).p == 4.0);
    CHECK_THROWS_AS(parse_config({"--config", dir.str("missing.json")}), ConfigError);
    CHECK_THROWS_AS(parse_config({"mesh", "--bogus"}), ConfigError);
}

TEST_CASE("config hash ignores output location and threads") {
    RunConfig a = config_from_json(Json::parse(R"({"command": "mesh", "out": "x", "threads": 4})"));
    RunConfig b = config_from_json(Json::parse(R"({"command": "mesh", "out": "y"})"));
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    RunConfig c = config_from_json(Json::parse(R"({"command": "mesh", "seed": 2})"));
    CHECK(a.hash() != c.hash());
}

TEST_CASE("mesh command writes a loadable mesh") {
    TempDir dir("mesh");
    CHECK(main_entry({"mesh", "--out", dir.str("out")}) == kExitOk);
    const Json j = Json::parse(read_text_file(dir.path / "out" / "mesh.json"));
    CHECK(j.contains("config_hash"));
    CHECK(mesh_from_json(j).num_vertices() == 25);
}

TEST_CASE("exit codes") {
    TempDir dir("codes");
    SUBCASE("incompatible Neumann data") {
        const std::string c = write_config(dir, "n.json", R"({"command": "solve-neumann", "data": {"g": 1, "theta": 0}})");
        CHECK(main_entry({"--config", c, "--out", dir.str("n")}) == kExitNumerical);
        const Json err = Json::parse(read_text_file(dir.path / "n" / "error.json"));
        CHECK(err["error"] == "compatibility");
        CHECK(err["defect"].get<double>() == doctest::Approx(1.0));
    }
    SUBCASE("configuration error") {
        CHECK(main_entry({"solve-plap", "--p", "0.5", "--out", dir.str("p")}) == kExitConfig);
    }
    SUBCASE("artifact conflict") {
        CHECK(main_entry({"mesh", "--out", dir.str("m")}) == kExitOk);
        CHECK(main_entry({"mesh", "--out", dir.str("m")}) == kExitOk);
        CHECK(main_entry({"mesh", "--out", dir.str("m"), "--seed", "5"}) == kExitConfig);
        CHECK(main_entry({"mesh", "--out", dir.str("m"), "--seed", "5", "--force"}) == kExitOk);
    }
}

TEST_CASE("solve commands") {
    TempDir dir("solve");
    const std::string lap = write_config(dir, "l.json", R"({"command": "solve-laplace",
        "domain": {"kind": "unit_square", "n": 8}, "partition": {"dirichlet": ["left", "right"]}, "data": {"f": "x"}})");
    CHECK(main_entry({"--config", lap, "--out", dir.str("l")}) == kExitOk);
    const Json rep = Json::parse(read_text_file(dir.path / "l" / "report.json"));
    CHECK(rep["residual"].get<double>() <= 1e-10);

    const std::string plap = write_config(dir, "p.json", R"({"command": "solve-plap", "p": 4, "trials": 20,
        "domain": {"kind": "unit_square", "n": 6}, "data": {"f": "x2_minus_y2"}})");
    CHECK(main_entry({"--config", plap, "--out", dir.str("p")}) == kExitOk);
    const Json pr = Json::parse(read_text_file(dir.path / "p" / "report.json"));
    CHECK(pr["p"] == 4.0);
    CHECK(pr["stationarity"].get<double>() <= 1e-10);
    CHECK(pr["certificate"]["passed"] == true);
}

TEST_CASE("verify command") {
    TempDir dir("verify");
    CHECK(main_entry({"verify", "counterexample_punctured", "--p", "3", "--out", dir.str("v")}) == kExitOk);
    const std::string csv = read_text_file(dir.path / "v" / "counterexample_punctured.csv");
    CHECK(csv.rfind("# config_hash: ", 0) == 0);
    const Json summary = Json::parse(read_text_file(dir.path / "v" / "counterexample_punctured.json"));
    CHECK(summary["pass"] == true);
}

TEST_CASE("sweep on affine data") {
    TempDir dir("sweep");
    const std::string c = write_config(dir, "s.json", R"({"command": "sweep", "domain": {"kind": "unit_square", "n": 4},
        "partition": {"dirichlet": ["left", "right"]}, "data": {"f": "x"}, "sweep": {"p": [2], "levels": [0, 1]}})");
    CHECK(main_entry({"--config", c, "--out", dir.str("s")}) == kExitOk);
    const std::string csv = read_text_file(dir.path / "s" / "sweep.csv");
    CHECK(csv.find("p,level,h,energy,stationarity,iterations,alpha,fit_quality,ok\n") != std::string::npos);
    std::size_t rows = 0;
    std::size_t pos = csv.find("\n2,");
    while (pos != std::string::npos) {
        ++rows;
        const std::size_t line_end = csv.find('\n', pos + 1);
        const std::string line = csv.substr(pos + 1, line_end - pos - 1);
        // p, level, h, energy, ...
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t k = 0; k <= line.size(); ++k)
            if (k == line.size() || line[k] == ',') {
                cells.push_back(line.substr(start, k - start));
                start = k + 1;
            }
        REQUIRE(cells.size() == 9);
        CHECK(std::stod(cells[3]) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::stod(cells[6]) == doctest::Approx(1.0).epsilon(0.1));
        CHECK(cells[8] == "1");
        pos = csv.find("\n2,", line_end);
    }
    CHECK(rows == 2);
}
