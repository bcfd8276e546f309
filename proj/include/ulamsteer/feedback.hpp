#pragma once

#include "ulamsteer/grid.hpp"
#include "ulamsteer/systems.hpp"
#include "ulamsteer/transport.hpp"
#include "ulamsteer/ulam.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace ulamsteer {

/// Time-varying stochastic feedback on the cells: lambda[n](k, i) is the
/// probability of control k in cell i at step n. Cells without mass at step
/// n are masked out and carry an all-zero column.
struct FeedbackLaw {
    std::size_t n_cells = 0;
    std::size_t n_controls = 0;
    double eps_mass = 1e-12;
    std::vector<Eigen::MatrixXd> lambda;
    std::vector<std::vector<char>> defined;

    std::size_t horizon() const { return lambda.size(); }
};

inline constexpr double kDefaultEpsMass = 1e-12;

/// lambda_n^{k,i} = nu_n^{k,i} / mu_n^i where mu_n^i > eps_mass, else 0. The
/// divisor is the marginal of nu_n, so defined columns sum to one up to
/// rounding.
FeedbackLaw extract_feedback(const TransportSolution& solution, double eps_mass = kDefaultEpsMass);

struct Trajectory {
    std::vector<std::vector<double>> measures; // N+1
    std::vector<double> step_cost;
    double total_cost = 0.0;
    // Largest |sum_i mu_{n+1}^i - sum_i mu_n^i| over the steps.
    double mass_drift = 0.0;
    // Mass at or below eps_mass that sat on masked-out cells and was dropped.
    double dropped_mass = 0.0;
};

/// Closed-loop chain mu_{n+1}^j = sum_{k,i} p_ij^k lambda_n^{k,i} mu_n^i.
/// Throws UndefinedLaw if more than eps_mass reaches a masked-out cell.
Trajectory propagate(const TransitionTensor& tensor, const FeedbackLaw& law,
                     const std::vector<double>& mu0, std::size_t horizon, const CostTable& costs);

/// Random stream of one agent: a 64-bit Mersenne twister seeded from
/// (seed, agent) through std::seed_seq.
class AgentRng {
public:
    AgentRng(std::uint64_t seed, std::uint64_t agent);
    // Uniform on [0, 1) from the top 53 bits of one draw.
    double uniform();
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

using InitialSampler = std::function<State(AgentRng&)>;

// Every agent starts at the same point.
InitialSampler point_sampler(State x0);
// Cell drawn from the measure, then a uniform point inside that cell.
InitialSampler measure_sampler(const Partition& partition, const std::vector<double>& weights);

struct RolloutOptions {
    std::size_t agents = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::size_t keep_paths = 0; // state paths stored for the first agents
};

struct RolloutResult {
    std::vector<std::size_t> counts;       // final-cell histogram
    std::vector<double> final_measure;     // counts / agents
    std::size_t flagged_agents = 0;        // agents that met a masked-out cell
    std::size_t flagged_events = 0;        // (agent, step) pairs in masked-out cells
    std::vector<std::vector<State>> paths; // keep_paths paths of N+1 states
};

// Inverse-CDF draw over a probability column in fixed control order.
std::size_t sample_control(const Eigen::MatrixXd& lambda, std::size_t cell, double u);

/// Simulates agents of the original system under the cell-wise law: at each
/// step the agent's cell selects a control distribution; agents in masked-out
/// cells draw uniformly among the controls and are flagged.
RolloutResult rollout(const SystemMap& system, const Partition& partition, const ControlGrid& controls,
                      const FeedbackLaw& law, const InitialSampler& sampler,
                      const RolloutOptions& options);

} // namespace ulamsteer
