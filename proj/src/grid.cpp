#include "ulamsteer/grid.hpp"

#include "ulamsteer/error.hpp"
#include "ulamsteer/hash.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ulamsteer {

namespace {

void check_box(const std::vector<double>& lower, const std::vector<double>& upper,
               bool allow_degenerate) {
    if (lower.size() != upper.size())
        throw InvalidArgument("box bounds have mismatched dimensions");
    if (lower.empty()) throw InvalidArgument("box must have at least one axis");
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]))
            throw InvalidArgument("box bounds must be finite");
        const bool bad = allow_degenerate ? lower[d] > upper[d] : lower[d] >= upper[d];
        if (bad)
            throw InvalidArgument("inverted bounds on axis " + std::to_string(d));
    }
}

} // namespace

bool Box::contains(std::span<const double> x) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t d = 0; d < x.size(); ++d)
        if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    return true;
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t d = 0; d < lower.size(); ++d) v *= upper[d] - lower[d];
    return v;
}

Partition::Partition(std::vector<double> lower, std::vector<double> upper,
                     std::vector<std::size_t> resolution) {
    check_box(lower, upper, false);
    if (resolution.size() != lower.size())
        throw InvalidArgument("resolution has a different dimension than the box");
    n_cells_ = 1;
    for (std::size_t r : resolution) {
        if (r < 1) throw InvalidArgument("resolution must be >= 1 on every axis");
        n_cells_ *= r;
    }
    widths_.resize(lower.size());
    cell_volume_ = 1.0;
    for (std::size_t d = 0; d < lower.size(); ++d) {
        widths_[d] = (upper[d] - lower[d]) / static_cast<double>(resolution[d]);
        cell_volume_ *= widths_[d];
    }
    box_ = Box{std::move(lower), std::move(upper)};
    resolution_ = std::move(resolution);
}

Partition build_partition(std::vector<double> lower, std::vector<double> upper,
                          std::vector<std::size_t> resolution) {
    return Partition(std::move(lower), std::move(upper), std::move(resolution));
}

void Partition::check_cell(std::size_t cell) const {
    if (cell >= n_cells_)
        throw OutOfDomain("cell index " + std::to_string(cell) + " out of range (n_x = " +
                          std::to_string(n_cells_) + ")");
}

std::vector<std::size_t> Partition::multi_index(std::size_t cell) const {
    check_cell(cell);
    std::vector<std::size_t> mi(dim());
    for (std::size_t d = 0; d < dim(); ++d) {
        mi[d] = cell % resolution_[d];
        cell /= resolution_[d];
    }
    return mi;
}

std::size_t Partition::flat_index(std::span<const std::size_t> multi) const {
    if (multi.size() != dim()) throw InvalidArgument("multi-index has wrong dimension");
    std::size_t idx = 0;
    for (std::size_t d = dim(); d-- > 0;) {
        if (multi[d] >= resolution_[d]) throw OutOfDomain("multi-index out of range");
        idx = idx * resolution_[d] + multi[d];
    }
    return idx;
}

Box Partition::cell_box(std::size_t cell) const {
    const auto mi = multi_index(cell);
    Box b{std::vector<double>(dim()), std::vector<double>(dim())};
    for (std::size_t d = 0; d < dim(); ++d) {
        b.lower[d] = box_.lower[d] + static_cast<double>(mi[d]) * widths_[d];
        b.upper[d] = mi[d] + 1 == resolution_[d]
                         ? box_.upper[d]
                         : box_.lower[d] + static_cast<double>(mi[d] + 1) * widths_[d];
    }
    return b;
}

State Partition::center(std::size_t cell) const {
    const auto mi = multi_index(cell);
    State c(dim());
    for (std::size_t d = 0; d < dim(); ++d)
        c[d] = box_.lower[d] + (static_cast<double>(mi[d]) + 0.5) * widths_[d];
    return c;
}

std::optional<std::size_t> Partition::try_locate(std::span<const double> x) const {
    if (!box_.contains(x)) return std::nullopt;
    std::size_t idx = 0;
    for (std::size_t d = dim(); d-- > 0;) {
        const double r = static_cast<double>(resolution_[d]);
        const double t = (x[d] - box_.lower[d]) / (box_.upper[d] - box_.lower[d]) * r;
        auto i = static_cast<std::size_t>(std::floor(t));
        if (i >= resolution_[d]) i = resolution_[d] - 1;
        idx = idx * resolution_[d] + i;
    }
    return idx;
}

std::size_t Partition::locate(std::span<const double> x) const {
    if (x.size() != dim()) throw InvalidArgument("point has wrong dimension");
    auto c = try_locate(x);
    if (!c) throw OutOfDomain("point outside the partitioned box");
    return *c;
}

std::vector<State> Partition::quadrature_points(std::size_t cell, std::size_t q) const {
    if (q < 1) throw InvalidArgument("quadrature order must be >= 1");
    const Box b = cell_box(cell);
    std::size_t count = 1;
    for (std::size_t d = 0; d < dim(); ++d) count *= q;
    std::vector<State> pts;
    pts.reserve(count);
    std::vector<double> h(dim());
    for (std::size_t d = 0; d < dim(); ++d) h[d] = (b.upper[d] - b.lower[d]) / static_cast<double>(q);
    for (std::size_t s = 0; s < count; ++s) {
        State p(dim());
        std::size_t rest = s;
        for (std::size_t d = 0; d < dim(); ++d) {
            const std::size_t j = rest % q;
            rest /= q;
            p[d] = b.lower[d] + (static_cast<double>(j) + 0.5) * h[d];
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

std::uint64_t Partition::hash() const {
    Fnv1a h;
    h.add(std::string_view("partition"));
    h.add(box_.lower);
    h.add(box_.upper);
    for (std::size_t r : resolution_) h.add(static_cast<std::uint64_t>(r));
    return h.value();
}

ControlGrid::ControlGrid(Box box, std::vector<Control> points)
    : box_(std::move(box)), points_(std::move(points)) {
    check_box(box_.lower, box_.upper, true);
    if (points_.empty()) throw InvalidArgument("control grid must contain at least one point");
    for (const auto& p : points_) {
        if (p.size() != box_.dim()) throw InvalidArgument("control point has wrong dimension");
        if (!box_.contains(p)) throw InvalidArgument("control point outside the control box");
    }
    for (std::size_t a = 0; a < points_.size(); ++a)
        for (std::size_t b = a + 1; b < points_.size(); ++b)
            if (points_[a] == points_[b]) throw InvalidArgument("duplicate control point");
}

std::uint64_t ControlGrid::hash() const {
    Fnv1a h;
    h.add(std::string_view("controls"));
    h.add(box_.lower);
    h.add(box_.upper);
    h.add(static_cast<std::uint64_t>(points_.size()));
    for (const auto& p : points_) h.add(p);
    return h.value();
}

ControlGrid discretize_controls(std::vector<double> lower, std::vector<double> upper,
                                std::vector<std::size_t> counts) {
    check_box(lower, upper, true);
    if (counts.size() != lower.size())
        throw InvalidArgument("control counts have a different dimension than the box");
    std::size_t total = 1;
    for (std::size_t c : counts) {
        if (c < 1) throw InvalidArgument("control count must be >= 1 on every axis");
        total *= c;
    }
    // A degenerate axis (lower == upper) can only carry one distinct value.
    for (std::size_t d = 0; d < counts.size(); ++d)
        if (lower[d] == upper[d] && counts[d] > 1)
            throw InvalidArgument("degenerate control axis admits a single point only");

    std::vector<std::vector<double>> axis(lower.size());
    for (std::size_t d = 0; d < lower.size(); ++d) {
        const std::size_t c = counts[d];
        if (c == 1) {
            axis[d] = {0.5 * (lower[d] + upper[d])};
            continue;
        }
        axis[d].resize(c);
        for (std::size_t j = 0; j < c; ++j)
            axis[d][j] = lower[d] + (upper[d] - lower[d]) * static_cast<double>(j) /
                                        static_cast<double>(c - 1);
        axis[d][c - 1] = upper[d];
    }
    std::vector<Control> pts;
    pts.reserve(total);
    for (std::size_t s = 0; s < total; ++s) {
        Control u(lower.size());
        std::size_t rest = s;
        for (std::size_t d = 0; d < lower.size(); ++d) {
            u[d] = axis[d][rest % counts[d]];
            rest /= counts[d];
        }
        pts.push_back(std::move(u));
    }
    return ControlGrid(Box{std::move(lower), std::move(upper)}, std::move(pts));
}

Measure Measure::dirac(std::size_t n_cells, std::size_t cell) {
    if (cell >= n_cells) throw OutOfDomain("Dirac cell out of range");
    std::vector<double> w(n_cells, 0.0);
    w[cell] = 1.0;
    return Measure(std::move(w));
}

Measure Measure::uniform(std::size_t n_cells) {
    if (n_cells == 0) throw InvalidArgument("uniform measure needs at least one cell");
    return Measure(std::vector<double>(n_cells, 1.0 / static_cast<double>(n_cells)));
}

double Measure::total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

void Measure::validate() const {
    if (weights.empty()) throw InvalidArgument("measure is empty");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidArgument("measure has a negative or non-finite entry");
    if (std::abs(total() - 1.0) > kNormTolerance)
        throw InvalidArgument("measure does not sum to 1");
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("vectors differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

} // namespace ulamsteer
