#include "ulamsteer/feedback.hpp"

#include "ulamsteer/error.hpp"
#include "ulamsteer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ulamsteer {

FeedbackLaw extract_feedback(const TransportSolution& solution, double eps_mass) {
    FeedbackLaw law;
    law.n_cells = solution.n_cells;
    law.n_controls = solution.n_controls;
    law.eps_mass = eps_mass;
    for (std::size_t n = 0; n < solution.horizon; ++n) {
        const Eigen::MatrixXd& nu = solution.nu[n];
        Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(nu.rows(), nu.cols());
        std::vector<char> mask(solution.n_cells, 0);
        for (Eigen::Index i = 0; i < nu.cols(); ++i) {
            if (!(solution.mu[n][static_cast<std::size_t>(i)] > eps_mass)) continue;
            const double m = nu.col(i).sum();
            if (!(m > 0.0)) continue;
            lam.col(i) = nu.col(i) / m;
            mask[static_cast<std::size_t>(i)] = 1;
        }
        law.lambda.push_back(std::move(lam));
        law.defined.push_back(std::move(mask));
    }
    return law;
}

Trajectory propagate(const TransitionTensor& tensor, const FeedbackLaw& law,
                     const std::vector<double>& mu0, std::size_t horizon, const CostTable& costs) {
    if (law.horizon() < horizon) throw InvalidArgument("feedback law is shorter than the horizon");
    if (mu0.size() != tensor.n_cells || law.n_cells != tensor.n_cells ||
        law.n_controls != tensor.n_controls)
        throw InvalidArgument("feedback law, tensor and measure disagree in size");
    if (costs.n_cells() != tensor.n_cells || costs.n_controls() != tensor.n_controls)
        throw InvalidArgument("cost table does not match the tensor");

    const std::size_t nx = tensor.n_cells, nu = tensor.n_controls;
    Trajectory tr;
    tr.measures.push_back(mu0);
    for (std::size_t n = 0; n < horizon; ++n) {
        const std::vector<double>& cur = tr.measures.back();
        std::vector<double> next(nx, 0.0);
        double cost = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double m = cur[i];
            if (m == 0.0) continue;
            if (!law.defined[n][i]) {
                if (m > law.eps_mass)
                    throw UndefinedLaw("step " + std::to_string(n) + ": mass " + std::to_string(m) +
                                       " in cell " + std::to_string(i) + " where the law is undefined");
                tr.dropped_mass += m;
                continue;
            }
            for (std::size_t k = 0; k < nu; ++k) {
                const double w = law.lambda[n](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) * m;
                if (w == 0.0) continue;
                cost += costs(i, k) * w;
                for (SparseRowMatrix::InnerIterator it(tensor.P[k], static_cast<Eigen::Index>(i)); it; ++it)
                    next[static_cast<std::size_t>(it.col())] += it.value() * w;
            }
        }
        const double before = std::accumulate(cur.begin(), cur.end(), 0.0);
        const double after = std::accumulate(next.begin(), next.end(), 0.0);
        tr.mass_drift = std::max(tr.mass_drift, std::abs(after - before));
        tr.step_cost.push_back(cost);
        tr.total_cost += cost;
        tr.measures.push_back(std::move(next));
    }
    return tr;
}

AgentRng::AgentRng(std::uint64_t seed, std::uint64_t agent) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(agent), static_cast<std::uint32_t>(agent >> 32)};
    engine_.seed(seq);
}

double AgentRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

InitialSampler point_sampler(State x0) {
    return [x0 = std::move(x0)](AgentRng&) { return x0; };
}

InitialSampler measure_sampler(const Partition& partition, const std::vector<double>& weights) {
    if (weights.size() != partition.size()) throw InvalidArgument("measure does not match the partition");
    std::vector<double> cdf(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cdf.begin());
    const double total = cdf.empty() ? 0.0 : cdf.back();
    if (!(total > 0.0)) throw InvalidArgument("measure has no mass");
    // Last cell with positive mass, so that rounding never selects an empty tail.
    std::size_t last = weights.size() - 1;
    while (last > 0 && weights[last] <= 0.0) --last;
    return [&partition, cdf = std::move(cdf), total, last](AgentRng& rng) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t cell = std::min(static_cast<std::size_t>(it - cdf.begin()), last);
        const Box b = partition.cell_box(cell);
        State x(b.dim());
        for (std::size_t d = 0; d < b.dim(); ++d) x[d] = b.lower[d] + rng.uniform() * (b.upper[d] - b.lower[d]);
        return x;
    };
}

std::size_t sample_control(const Eigen::MatrixXd& lambda, std::size_t cell, double u) {
    const auto col = static_cast<Eigen::Index>(cell);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (Eigen::Index k = 0; k < lambda.rows(); ++k) {
        const double p = lambda(k, col);
        if (p <= 0.0) continue;
        acc += p;
        last_positive = static_cast<std::size_t>(k);
        if (u < acc) return last_positive;
    }
    return last_positive;
}

RolloutResult rollout(const SystemMap& system, const Partition& partition, const ControlGrid& controls,
                      const FeedbackLaw& law, const InitialSampler& sampler,
                      const RolloutOptions& options) {
    if (options.agents < 1) throw InvalidArgument("rollout needs at least one agent");
    if (law.n_cells != partition.size() || law.n_controls != controls.size())
        throw InvalidArgument("feedback law does not match the partition or control grid");
    const std::size_t N = law.horizon();
    const std::size_t M = options.agents;
    const std::size_t keep = std::min(options.keep_paths, M);

    std::vector<std::size_t> final_cell(M);
    std::vector<std::uint32_t> flags(M, 0);
    std::vector<std::vector<State>> paths(keep);

    parallel_for(M, options.threads, [&](std::size_t a) {
        AgentRng rng(options.seed, a);
        State x = sampler(rng);
        if (a < keep) paths[a].push_back(x);
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t cell = partition.locate(x);
            std::size_t k;
            if (law.defined[n][cell]) {
                k = sample_control(law.lambda[n], cell, rng.uniform());
            } else {
                k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(controls.size()));
                k = std::min(k, controls.size() - 1);
                ++flags[a];
            }
            x = system.step(x, controls[k]);
            if (a < keep) paths[a].push_back(x);
        }
        final_cell[a] = partition.locate(x);
    });

    RolloutResult r;
    r.counts.assign(partition.size(), 0);
    for (std::size_t a = 0; a < M; ++a) {
        ++r.counts[final_cell[a]];
        if (flags[a]) {
            ++r.flagged_agents;
            r.flagged_events += flags[a];
        }
    }
    r.final_measure.resize(partition.size());
    for (std::size_t i = 0; i < partition.size(); ++i)
        r.final_measure[i] = static_cast<double>(r.counts[i]) / static_cast<double>(M);
    r.paths = std::move(paths);
    return r;
}

} // namespace ulamsteer
