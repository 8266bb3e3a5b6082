#pragma once

// Command-line front end: JSON configs in, deterministic text artifacts out.
//
// Exit codes: 0 success, 2 configuration or schema error, 3 numerical
// failure, 4 I/O failure. Failures print one JSON object on stderr.

#include "hybridspec/circuit.hpp"
#include "hybridspec/fit.hpp"
#include "hybridspec/model.hpp"
#include "hybridspec/tuning.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hybridspec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

struct RunConfig {
    std::string command;  ///< simulate, sweep, fit, circuit or tune
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    int verbosity = 0;
};

/// Runs one command and maps exceptions to exit codes.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// Parses argv with CLI11 and calls run().
int main_entry(int argc, char** argv);

/// Config fragments, exposed for tests. `where` prefixes error messages.
[[nodiscard]] SystemParams parse_system(const nlohmann::json& j, const std::string& where);
[[nodiscard]] std::vector<double> parse_frequency_grid(const nlohmann::json& j, const std::string& where);
[[nodiscard]] TuningModel parse_tuning(const nlohmann::json& j, const std::string& where);
[[nodiscard]] GaSettings parse_ga(const nlohmann::json& j, const std::string& where);

[[nodiscard]] nlohmann::json to_json(const SystemParams& p);
[[nodiscard]] nlohmann::json to_json(const TuningModel& m);
[[nodiscard]] nlohmann::json to_json(const FitResult& r);

/// Fixed-layout text table of a fit result, one row per parameter.
[[nodiscard]] std::string fit_table(const FitResult& r);

}  // namespace hybridspec::cli
