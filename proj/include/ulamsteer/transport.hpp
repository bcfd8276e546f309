#pragma once

#include "ulamsteer/grid.hpp"
#include "ulamsteer/lp.hpp"
#include "ulamsteer/ulam.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ulamsteer {

/// Finite transport LP over the controlled chain.
///
/// Columns: nu_n^{k,i} for n < N, then mu_n^i for 1 <= n <= N-1. The
/// terminal measure mu_N is not a variable; it is pinned to the target by
/// substitution into the last pushforward block.
///
/// Rows, in order:
///   pushforward  n*n_x + j        mu_{n+1}^j - sum_{k,i} p_ij^k nu_n^{k,i} = 0  (n < N-1)
///   terminal     (N-1)*n_x + j    sum_{k,i} p_ij^k nu_{N-1}^{k,i} = muf^j
///   normalize    N*n_x + n        sum_i mu_{n+1}^i = 1  (for n = N-1: sum of the pushed mass)
///   marginal     N*n_x + N + n*n_x + j   sum_k nu_n^{k,j} - mu_n^j = 0  (mu_0 is data)
struct LPProblem {
    std::size_t n_cells = 0;
    std::size_t n_controls = 0;
    std::size_t horizon = 0;
    lp::StandardForm form;
    std::vector<double> mu0;
    std::vector<double> muf;

    // Equivalent form in the nu variables alone: mu_n is replaced by the
    // marginal of nu_n, which leaves one block of rows per step plus the pin.
    lp::StandardForm nu_form;

    Eigen::Index n_nu() const { return static_cast<Eigen::Index>(horizon * n_controls * n_cells); }
    Eigen::Index nu_col(std::size_t n, std::size_t k, std::size_t i) const {
        return static_cast<Eigen::Index>((n * n_controls + k) * n_cells + i);
    }
    Eigen::Index mu_col(std::size_t n, std::size_t i) const {
        return n_nu() + static_cast<Eigen::Index>((n - 1) * n_cells + i);
    }
    Eigen::Index pushforward_row(std::size_t n, std::size_t j) const {
        return static_cast<Eigen::Index>(n * n_cells + j);
    }
    Eigen::Index normalization_row(std::size_t n) const {
        return static_cast<Eigen::Index>(horizon * n_cells + n);
    }
    Eigen::Index marginal_row(std::size_t n, std::size_t j) const {
        return static_cast<Eigen::Index>(horizon * n_cells + horizon + n * n_cells + j);
    }

    std::vector<std::string> row_names() const;
    std::vector<std::string> column_names() const;
};

LPProblem assemble(const TransitionTensor& tensor, const CostTable& costs, const Measure& mu0,
                   const Measure& muf, std::size_t horizon);

struct TransportResiduals {
    double marginal = 0.0;     // max |sum_k nu_n^{k,i} - mu_n^i|
    double pushforward = 0.0;  // max |mu_{n+1}^j - sum p nu_n|
    double terminal_l1 = 0.0;  // |mu_N - muf|_1
    double normalization = 0.0; // max_n |sum_i mu_n^i - 1|
    double min_mass = 0.0;     // most negative raw LP value before clipping
    double clipped_mass = 0.0; // total magnitude removed by clipping
};

struct TransportSolution {
    std::size_t n_cells = 0;
    std::size_t n_controls = 0;
    std::size_t horizon = 0;
    std::vector<std::vector<double>> mu;  // N+1 measures
    std::vector<Eigen::MatrixXd> nu;      // N matrices, n_controls x n_cells
    double objective = 0.0;
    double dual_bound = 0.0;
    TransportResiduals residuals;
    std::string method;
    int iterations = 0;
};

struct TransportOptions {
    lp::Options lp;
    double terminal_tol = 1e-6;
    double consistency_tol = 1e-8;
    double negativity_tol = 1e-9;
};

struct SolveOutcome {
    lp::Status status = lp::Status::NumericalFailure;
    std::optional<TransportSolution> solution;
    // Infeasible: y over the rows of LPProblem::form with A'y <= 0 and b'y > 0.
    Eigen::VectorXd certificate;
    bool certificate_verified = false;
    std::string note;
};

SolveOutcome solve(const LPProblem& problem, const TransportOptions& options = {});

// Objective of the full problem at a solution, recomputed from nu.
double transport_cost(const CostTable& costs, const TransportSolution& sol);

void write_mps(const LPProblem& problem, std::ostream& out);

} // namespace ulamsteer
