#pragma once

#include "ulamsteer/grid.hpp"
#include "ulamsteer/ulam.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace ulamsteer {

// Fixed-size bitset over cell indices.
class CellSet {
public:
    CellSet() = default;
    explicit CellSet(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    std::size_t size() const { return n_; }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void merge(const CellSet& o) {
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    }
    std::size_t count() const;
    std::vector<std::size_t> members() const;
    bool operator==(const CellSet&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Exactly-n-step reachability relations for n = 0..horizon.
///
/// reach[n][i] is the set of cells reachable from cell i in exactly n chain
/// steps through positive transition probabilities under some control word.
/// With `cumulative`, reach[n][i] holds everything reachable in at most n steps.
struct ReachabilitySets {
    std::size_t horizon = 0;
    bool cumulative = false;
    std::vector<std::vector<CellSet>> reach;

    bool reachable(std::size_t n, std::size_t i, std::size_t j) const { return reach[n][i].test(j); }
};

// One-step successor set of each cell, union over controls.
std::vector<CellSet> successor_sets(const TransitionTensor& tensor);

ReachabilitySets reachable_sets(const TransitionTensor& tensor, std::size_t horizon,
                                bool cumulative = false, std::size_t threads = 1);

struct Witness {
    std::vector<std::size_t> cells;    // horizon + 1 cells, from source to target
    std::vector<std::size_t> controls; // horizon controls
    double probability = 0.0;          // product of the path's transition probabilities
};

// Control word and cell path realizing an exactly-`horizon`-step transition
// from `from` to `to`, or nullopt if none exists.
std::optional<Witness> extract_witness(const TransitionTensor& tensor, std::size_t from,
                                       std::size_t to, std::size_t horizon);

struct ReachabilityVerdict {
    bool satisfied = true;
    std::vector<std::pair<std::size_t, std::size_t>> violations; // (source, target)
};

/// Sufficient transport condition on the chain: every target-support cell is
/// reachable in exactly `horizon` steps from every initial-support cell.
/// Supports are cells with mass strictly above `support_threshold`.
ReachabilityVerdict check_sufficient_condition(const ReachabilitySets& sets, const Measure& mu0,
                                               const Measure& muf, std::size_t horizon,
                                               double support_threshold = 1e-12);

} // namespace ulamsteer
