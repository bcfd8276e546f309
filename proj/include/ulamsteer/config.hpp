#pragma once

#include "ulamsteer/grid.hpp"
#include "ulamsteer/systems.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ulamsteer {

struct MeasureSpec {
    std::string type; // dirac | uniform | gaussian_mixture | explicit
    State point;                    // dirac
    std::optional<Box> box;         // uniform; whole domain when absent
    std::vector<State> centers;     // gaussian_mixture
    std::vector<double> weights;    // gaussian_mixture component weights, or explicit cell weights
    std::vector<double> sigmas;     // gaussian_mixture, isotropic per component
    double truncate_sigmas = 0.0;   // 0: no truncation
    std::string file;               // explicit weights file, resolved against the config directory
};

struct SystemSpec {
    std::string name; // translation | double_integrator | gyre_unicycle (alias double_gyre)
    bool clamp = true;
    double drift = DoubleIntegrator::kDefaultDrift;
    DoubleGyreParams gyre;
};

struct Tolerances {
    double lp = 1e-8;
    double eps_mass = 1e-12;
    double terminal = 1e-6;
    double consistency = 1e-8;
    double support = 1e-12;
};

struct RolloutSpec {
    std::size_t agents = 0;
    std::size_t keep_paths = 0;
    std::string initial = "measure"; // measure | point
    State point;                     // for initial = point
};

struct RunConfig {
    SystemSpec system;
    Box domain;
    std::vector<std::size_t> resolution;
    Box control_box;
    std::vector<std::size_t> control_counts;
    std::size_t horizon = 0;
    std::string cost = "quadratic";
    bool cost_per_volume = false;
    std::size_t quadrature = 8;
    MeasureSpec initial;
    MeasureSpec target;
    Tolerances tolerances;
    RolloutSpec rollout;
    std::uint64_t seed = 0;
    std::string output = "out";

    std::string base_dir;  // directory of the config file
    std::string canonical; // normalized JSON text of the parsed config
    std::uint64_t hash() const;
};

/// Parses a JSON run-config. Unknown keys anywhere are errors, as are
/// unresolved names and structurally invalid values; all raise ConfigError.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

Partition make_partition(const RunConfig& config);
ControlGrid make_controls(const RunConfig& config);
std::unique_ptr<SystemMap> make_system(const RunConfig& config);

/// Projects a measure spec onto the cells; q is the quadrature order used
/// for uniform-box and Gaussian specs. The result sums to 1 within 1e-12.
Measure project_measure(const MeasureSpec& spec, const Partition& partition, std::size_t q,
                        const std::string& base_dir = ".");

std::vector<double> read_weights_file(const std::string& path);

} // namespace ulamsteer
