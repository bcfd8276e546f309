#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace ulamsteer {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumerical = 4;

struct RunOptions {
    std::optional<std::string> out_dir; // overrides the config's output directory
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::size_t threads = 1;
    bool verbose = false;
};

/// Runs one CLI command against a config file and writes its artifacts and
/// manifest.json into the output directory. Commands: discretize,
/// check-reachability, solve, simulate, rollout, run, export-lp. Returns the
/// process exit code.
int execute(const std::string& command, const std::string& config_path, const RunOptions& options);

} // namespace ulamsteer
