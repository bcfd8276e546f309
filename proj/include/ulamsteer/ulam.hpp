#pragma once

#include "ulamsteer/grid.hpp"
#include "ulamsteer/systems.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ulamsteer {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Controlled Ulam-Galerkin transition tensor.
///
/// P[k](i, j) is the fraction of cell i that control k maps into cell j,
/// estimated on a deterministic q^d quadrature subgrid. Every row of every
/// P[k] is a probability vector.
struct TransitionTensor {
    std::size_t n_cells = 0;
    std::size_t n_controls = 0;
    std::size_t quadrature = 0;
    std::uint64_t partition_hash = 0;
    std::uint64_t controls_hash = 0;
    std::vector<SparseRowMatrix> P;

    double prob(std::size_t k, std::size_t i, std::size_t j) const { return P[k].coeff(i, j); }
    double row_sum(std::size_t k, std::size_t i) const;
    std::size_t nonzeros() const;

    bool operator==(const TransitionTensor& other) const;
};

// Per-build diagnostic: share of quadrature images that land within one
// local image spacing of a face of their target cell. Entries of the tensor
// can move under quadrature refinement only through such points.
struct TensorDiagnostics {
    double boundary_fraction = 0.0;
    std::vector<double> row_boundary_fraction; // indexed k * n_cells + i
};

TransitionTensor build_tensor(const SystemMap& system, const Partition& partition,
                              const ControlGrid& controls, std::size_t q,
                              std::size_t threads = 1, TensorDiagnostics* diagnostics = nullptr);

using StageCost = std::function<double(std::span<const double> x, std::span<const double> u)>;

// Built-in stage costs: "quadratic" (|x|^2 + |u|^2), "zero", "state" (|x|^2),
// "control" (|u|^2). Throws ConfigError for unknown names.
StageCost stage_cost_by_name(const std::string& name);

/// Cell-integrated stage cost: entry (i, k) is the volume of cell i times the
/// mean of cost(x_s, u_k) over the quadrature points x_s of the cell. With
/// `per_volume`, the volume factor is dropped (cell-average reading).
struct CostTable {
    Eigen::MatrixXd values; // n_cells x n_controls

    double operator()(std::size_t i, std::size_t k) const { return values(i, k); }
    std::size_t n_cells() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_controls() const { return static_cast<std::size_t>(values.cols()); }
};

CostTable build_cost_table(const Partition& partition, const ControlGrid& controls,
                           const StageCost& cost, std::size_t q, bool per_volume = false);

// Binary tensor file: little-endian, magic "ULAMTNS1", then n_x, n_u, q,
// partition hash, control hash (u64 each), then per control a u64 triplet
// count followed by (u64 i, u64 j, f64 p) triplets in row-major order.
void write_tensor_binary(const TransitionTensor& tensor, std::ostream& out);
TransitionTensor read_tensor_binary(std::istream& in);
void write_tensor_binary(const TransitionTensor& tensor, const std::string& path);
TransitionTensor read_tensor_binary(const std::string& path);

// Text export with one "k i j p" line per nonzero, for small instances.
void write_tensor_text(const TransitionTensor& tensor, std::ostream& out);

} // namespace ulamsteer
