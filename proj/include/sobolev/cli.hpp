#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sobolev/geometry.hpp"
#include "sobolev/io.hpp"

namespace sobolev::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

/// Schema violation; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct RunConfig {
    std::string command;     ///< mesh | solve-laplace | solve-neumann | solve-plap | verify | sweep | help
    std::string experiment;  ///< verify only

    DomainSpec domain;
    std::string domain_kind = "unit_square";
    int refine = 0;

    /// Labels of Dirichlet edges; nullopt means the command's default.
    std::optional<std::vector<std::string>> dirichlet_labels;
    std::vector<std::size_t> constraint_vertices;  ///< extra plap constraint vertices

    Json g = 0.0;      ///< load
    Json f = 0.0;      ///< Dirichlet datum / plap datum
    Json theta = 0.0;  ///< flux

    std::optional<double> p;
    std::optional<double> eps_final;
    double tol = 1e-10;
    int max_outer = 200;
    int trials = 100;

    std::vector<double> p_list;
    std::vector<int> levels;
    std::size_t n_pairs = 20000;

    Json verify = Json::object();  ///< experiment parameters

    std::filesystem::path out = "out";
    std::uint64_t seed = 0;
    int threads = 1;
    bool force = false;

    std::vector<std::string> warnings;

    /// Canonical JSON of every result-affecting setting (excludes out, threads, force).
    Json canonical() const;
    /// FNV-1a of canonical().dump(), 16 hex digits.
    std::string hash() const;
};

/// Validates a configuration object. Unknown keys become warnings.
RunConfig config_from_json(const Json& j);

/// Reads --config (if any), applies flag overrides, validates.
/// `--help` yields command "help".
RunConfig parse_config(const std::vector<std::string>& args);

/// Executes the configured command and returns the exit code. Failures print a
/// one-line JSON error record to stderr.
int run(const RunConfig& config);

/// parse_config + run with exceptions mapped onto exit codes.
int main_entry(const std::vector<std::string>& args);

}  // namespace sobolev::cli
