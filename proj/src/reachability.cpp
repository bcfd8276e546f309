#include "ulamsteer/reachability.hpp"

#include "ulamsteer/error.hpp"
#include "ulamsteer/parallel.hpp"

#include <bit>

namespace ulamsteer {

std::size_t CellSet::count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

std::vector<std::size_t> CellSet::members() const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        auto bits = words_[w];
        while (bits) {
            out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
            bits &= bits - 1;
        }
    }
    return out;
}

std::vector<CellSet> successor_sets(const TransitionTensor& tensor) {
    std::vector<CellSet> succ(tensor.n_cells, CellSet(tensor.n_cells));
    for (const auto& m : tensor.P)
        for (Eigen::Index r = 0; r < m.outerSize(); ++r)
            for (SparseRowMatrix::InnerIterator it(m, r); it; ++it)
                if (it.value() > 0.0) succ[static_cast<std::size_t>(r)].set(static_cast<std::size_t>(it.col()));
    return succ;
}

ReachabilitySets reachable_sets(const TransitionTensor& tensor, std::size_t horizon,
                                bool cumulative, std::size_t threads) {
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    const std::size_t n = tensor.n_cells;
    const auto succ = successor_sets(tensor);

    ReachabilitySets sets;
    sets.horizon = horizon;
    sets.cumulative = cumulative;
    sets.reach.assign(horizon + 1, std::vector<CellSet>(n, CellSet(n)));
    for (std::size_t i = 0; i < n; ++i) sets.reach[0][i].set(i);

    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t step = 0; step < horizon; ++step) {
            CellSet next(n);
            for (std::size_t m : sets.reach[step][i].members()) next.merge(succ[m]);
            if (cumulative) next.merge(sets.reach[step][i]);
            sets.reach[step + 1][i] = std::move(next);
        }
    });
    return sets;
}

std::optional<Witness> extract_witness(const TransitionTensor& tensor, std::size_t from,
                                       std::size_t to, std::size_t horizon) {
    const std::size_t n = tensor.n_cells;
    if (from >= n || to >= n) throw OutOfDomain("witness endpoints out of range");
    const auto succ = successor_sets(tensor);
    std::vector<CellSet> layer(horizon + 1, CellSet(n));
    layer[0].set(from);
    for (std::size_t s = 0; s < horizon; ++s)
        for (std::size_t m : layer[s].members()) layer[s + 1].merge(succ[m]);
    if (!layer[horizon].test(to)) return std::nullopt;

    // Walk back from the target through cells that were forward-reachable.
    Witness w;
    w.cells.assign(horizon + 1, 0);
    w.controls.assign(horizon, 0);
    w.cells[horizon] = to;
    w.probability = 1.0;
    std::size_t current = to;
    for (std::size_t s = horizon; s-- > 0;) {
        bool found = false;
        for (std::size_t m : layer[s].members()) {
            for (std::size_t k = 0; k < tensor.n_controls && !found; ++k) {
                const double p = tensor.prob(k, m, current);
                if (p > 0.0) {
                    w.cells[s] = m;
                    w.controls[s] = k;
                    w.probability *= p;
                    found = true;
                }
            }
            if (found) break;
        }
        if (!found) throw Error("reachability layers inconsistent during witness extraction");
        current = w.cells[s];
    }
    return w;
}

ReachabilityVerdict check_sufficient_condition(const ReachabilitySets& sets, const Measure& mu0,
                                               const Measure& muf, std::size_t horizon,
                                               double support_threshold) {
    if (horizon > sets.horizon) throw InvalidArgument("horizon exceeds computed reachability");
    const std::size_t n = sets.reach.front().size();
    if (mu0.size() != n || muf.size() != n)
        throw InvalidArgument("measures and reachability sets differ in cell count");
    ReachabilityVerdict verdict;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(mu0[i] > support_threshold)) continue;
        const CellSet& r = sets.reach[horizon][i];
        for (std::size_t j = 0; j < n; ++j)
            if (muf[j] > support_threshold && !r.test(j)) verdict.violations.emplace_back(i, j);
    }
    verdict.satisfied = verdict.violations.empty();
    return verdict;
}

} // namespace ulamsteer
