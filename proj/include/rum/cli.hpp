#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rum/grid.hpp"

namespace rum::cli {

/// Everything a run needs; JSON keys match the field names (intervals as [lo, hi]).
struct RunConfig {
    std::string scenario;  // rum | odd | power | even-real | even-complex | carleman | trajectory | sweep
    std::size_t nx = 63;
    std::size_t nt = 256;
    double T = 1.0;
    Interval omega{0.3, 0.7};
    Interval omega1{0.4, 0.6};
    Interval omega0{0.4, 0.6};
    int k = 1;
    /// Coupling power for power / even-real / even-complex (default 2).
    int n = 2;
    double eps = 1e-6;
    std::vector<double> eps_ladder{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    double s = 5.0;
    double lambda = 1.0;
    std::string scheme = "implicit_euler";  // or crank_nicolson
    double tol = 1e-8;
    int max_iter = 200;
    /// Initial data of rum / sweep: sine | zero | random.
    std::string data = "sine";
    std::string nonlinearity = "reaction-2k1";
    double bump_eps = 0.1;
    int draws = 100;
    std::string out = "out";
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Command-line values that override the file.
struct FlagOverrides {
    std::optional<std::size_t> nx, nt;
    std::optional<int> k, n;
    std::optional<double> eps, s;
    std::optional<std::vector<double>> eps_ladder;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

nlohmann::json to_json(const RunConfig& c);
/// Unknown keys and wrong types are ConfigErrors naming the key.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});

/// File (optional) then flags, validated.
RunConfig parse_config(const std::string& scenario, const std::optional<std::filesystem::path>& path,
                       const FlagOverrides& flags = {});

struct FileEntry {
    std::string name;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    RunConfig config;
    std::string version;
    double wall_seconds = 0.0;
    /// ok | flagged | error
    std::string status;
    std::vector<std::string> flags;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<FileEntry> files;  // every emitted file except the manifest itself

    /// 0 ok, 2 flagged or solver error.
    int exit_code() const { return status == "ok" ? 0 : 2; }
    nlohmann::json to_json() const;
};

/// Runs the scenario and writes summary.csv, field_<name>.csv, sweep.csv (sweep only)
/// and manifest.json into config.out. Solver failures are recorded as status "error"
/// with the files written so far kept.
RunManifest run(const RunConfig& config);

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// printf("%.17g") independent of the global locale.
std::string format_number(double v);

}  // namespace rum::cli
