#include "sobolev/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sobolev/error.hpp"

namespace sobolev {

std::string hex_digest(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

Json mesh_to_json(const Mesh& mesh) {
    Json j;
    Json verts = Json::array();
    for (const auto& v : mesh.vertices()) verts.push_back({v.x, v.y});
    Json tris = Json::array();
    for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
    Json edges = Json::array();
    for (const auto& e : mesh.boundary_edges()) edges.push_back({e.a, e.b, e.label});
    j["vertices"] = std::move(verts);
    j["triangles"] = std::move(tris);
    j["boundary_edges"] = std::move(edges);
    j["singular_vertices"] = std::vector<std::size_t>(mesh.singular_vertices().begin(), mesh.singular_vertices().end());
    j["mesh_hash"] = hex_digest(mesh.fingerprint());
    return j;
}

Mesh mesh_from_json(const Json& j) {
    try {
        std::vector<Point> verts;
        for (const auto& v : j.at("vertices")) verts.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        std::vector<Triangle> tris;
        for (const auto& t : j.at("triangles"))
            tris.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(), t.at(2).get<std::size_t>()});
        std::vector<BoundaryEdge> edges;
        for (const auto& e : j.at("boundary_edges"))
            edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<std::string>()});
        std::vector<std::size_t> singular;
        if (j.contains("singular_vertices")) singular = j.at("singular_vertices").get<std::vector<std::size_t>>();
        Mesh mesh(std::move(verts), std::move(tris), std::move(edges), std::move(singular));
        if (j.contains("mesh_hash") && j.at("mesh_hash").get<std::string>() != hex_digest(mesh.fingerprint()))
            throw InvalidArgument("mesh JSON: recorded mesh_hash does not match the contents");
        return mesh;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("mesh JSON: ") + e.what());
    }
}

Json field_to_json(const ScalarField& u) {
    Json j;
    j["kind"] = "scalar";
    j["values"] = std::vector<double>(u.values().begin(), u.values().end());
    j["mesh_hash"] = hex_digest(u.mesh().fingerprint());
    return j;
}

ScalarField field_from_json(const Mesh& mesh, const Json& j) {
    try {
        if (j.at("kind").get<std::string>() != "scalar") throw InvalidArgument("field JSON: kind must be \"scalar\"");
        if (j.contains("mesh_hash") && j.at("mesh_hash").get<std::string>() != hex_digest(mesh.fingerprint()))
            throw InvalidArgument("field JSON: mesh_hash does not match the mesh");
        return ScalarField(mesh, j.at("values").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("field JSON: ") + e.what());
    }
}

Json trace_to_json(const BoundaryTrace& trace) {
    Json j;
    j["kind"] = trace.support() == BoundaryTrace::Support::Vertices ? "trace" : "cotrace";
    j["region"] = std::string(to_string(trace.region()));
    j["indices"] = std::vector<std::size_t>(trace.indices().begin(), trace.indices().end());
    j["values"] = std::vector<double>(trace.values().begin(), trace.values().end());
    j["mesh_hash"] = hex_digest(trace.mesh().fingerprint());
    return j;
}

std::string report_csv(const Report& report, std::string_view config_hash) {
    std::string out = "# config_hash: " + std::string(config_hash) + "\n";
    for (std::size_t c = 0; c < report.columns.size(); ++c) out += (c ? "," : "") + report.columns[c];
    out += '\n';
    for (const auto& row : report.rows) {
        if (row.size() != report.columns.size()) throw InvalidArgument("report_csv: row width differs from the header");
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
        out += '\n';
    }
    return out;
}

Json report_summary(const Report& report) {
    Json j;
    j["experiment"] = report.experiment;
    j["fitted_value"] = report.fitted_value;
    j["tolerance"] = report.tolerance;
    j["pass"] = report.pass();
    Json checks = Json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.passed}});
    j["checks"] = std::move(checks);
    Json params = Json::object();
    for (const auto& [k, v] : report.parameters) params[k] = v;
    j["parameters"] = std::move(params);
    return j;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << content;
    if (!out) throw InvalidArgument("write failed for " + path.string());
}

std::optional<std::string> artifact_hash(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    const std::string text = read_text_file(path);
    constexpr std::string_view kCsvTag = "# config_hash: ";
    if (text.rfind(kCsvTag, 0) == 0) {
        const auto end = text.find('\n');
        return text.substr(kCsvTag.size(), end - kCsvTag.size());
    }
    const Json j = Json::parse(text, nullptr, false);
    if (j.is_object() && j.contains("config_hash") && j["config_hash"].is_string()) return j["config_hash"].get<std::string>();
    return std::nullopt;
}

}  // namespace sobolev
