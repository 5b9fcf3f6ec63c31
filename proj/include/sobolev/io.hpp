#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sobolev/fem.hpp"
#include "sobolev/verify.hpp"

namespace sobolev {

using Json = nlohmann::ordered_json;

/// 16 hex digits.
std::string hex_digest(std::uint64_t h);

/// {"vertices": [[x,y]...], "triangles": [[i,j,k]...], "boundary_edges": [[i,j,"tag"]...],
///  "singular_vertices": [...], "mesh_hash": "..."}. Doubles round-trip bit-exactly.
Json mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const Json& j);

/// {"kind": "scalar", "values": [...], "mesh_hash": "..."}.
Json field_to_json(const ScalarField& u);
/// Throws InvalidArgument when the recorded mesh hash does not match `mesh`.
ScalarField field_from_json(const Mesh& mesh, const Json& j);

/// {"kind": "trace"|"cotrace", "region": ..., "indices": [...], "values": [...]}.
Json trace_to_json(const BoundaryTrace& trace);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// First line "# config_hash: <hash>", then a header row and one row per report row.
std::string report_csv(const Report& report, std::string_view config_hash);
/// {"experiment", "fitted_value", "tolerance", "pass", "checks", "parameters"}.
Json report_summary(const Report& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Config hash recorded in an existing artifact (JSON key "config_hash" or the
/// CSV comment line); nullopt when the file is absent or carries none.
std::optional<std::string> artifact_hash(const std::filesystem::path& path);

}  // namespace sobolev
