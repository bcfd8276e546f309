#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ulamsteer {

using State = std::vector<double>;
using Control = std::vector<double>;

// Axis-aligned closed box [lower, upper].
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    bool contains(std::span<const double> x) const;
    double volume() const;
};

/// Uniform rectangular partition of a box into cells.
///
/// Cells are indexed so that axis 0 varies fastest: the multi-index
/// (i_0, ..., i_{d-1}) maps to i_0 + r_0 * (i_1 + r_1 * (...)). Each cell
/// is half-open [a, b) along every axis, except that the top face of the
/// box belongs to the last cell, which makes locate() total on the closed box.
class Partition {
public:
    Partition(std::vector<double> lower, std::vector<double> upper,
              std::vector<std::size_t> resolution);

    std::size_t dim() const { return box_.dim(); }
    std::size_t size() const { return n_cells_; }
    const Box& box() const { return box_; }
    const std::vector<std::size_t>& resolution() const { return resolution_; }
    const std::vector<double>& widths() const { return widths_; }
    double cell_volume() const { return cell_volume_; }

    std::vector<std::size_t> multi_index(std::size_t cell) const;
    std::size_t flat_index(std::span<const std::size_t> multi) const;

    Box cell_box(std::size_t cell) const;
    State center(std::size_t cell) const;

    // Throws OutOfDomain for points outside the closed box.
    std::size_t locate(std::span<const double> x) const;
    std::optional<std::size_t> try_locate(std::span<const double> x) const;

    /// Centers of a regular q^d subgrid of the cell, axis 0 fastest.
    std::vector<State> quadrature_points(std::size_t cell, std::size_t q) const;

    std::uint64_t hash() const;

private:
    void check_cell(std::size_t cell) const;

    Box box_;
    std::vector<std::size_t> resolution_;
    std::vector<double> widths_;
    std::size_t n_cells_ = 0;
    double cell_volume_ = 0.0;
};

Partition build_partition(std::vector<double> lower, std::vector<double> upper,
                          std::vector<std::size_t> resolution);

// Finite set of admissible controls drawn from a control box.
class ControlGrid {
public:
    ControlGrid(Box box, std::vector<Control> points);

    const Box& box() const { return box_; }
    const std::vector<Control>& points() const { return points_; }
    const Control& operator[](std::size_t k) const { return points_[k]; }
    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return box_.dim(); }

    std::uint64_t hash() const;

private:
    Box box_;
    std::vector<Control> points_;
};

/// Regular grid over the control box with both endpoints per axis when the
/// count is at least 2, and the midpoint when the count is 1.
ControlGrid discretize_controls(std::vector<double> lower, std::vector<double> upper,
                                std::vector<std::size_t> counts);

// Probability vector over the cells of a partition.
struct Measure {
    std::vector<double> weights;

    static constexpr double kNormTolerance = 1e-12;

    Measure() = default;
    explicit Measure(std::vector<double> w) : weights(std::move(w)) {}

    static Measure dirac(std::size_t n_cells, std::size_t cell);
    static Measure uniform(std::size_t n_cells);

    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t i) const { return weights[i]; }
    double total() const;

    // Throws InvalidArgument unless entries are >= 0 and sum to 1 within kNormTolerance.
    void validate() const;
};

double l1_distance(std::span<const double> a, std::span<const double> b);
inline double total_variation(std::span<const double> a, std::span<const double> b) {
    return 0.5 * l1_distance(a, b);
}

} // namespace ulamsteer
