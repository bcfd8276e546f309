#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>
#include <string>
#include <vector>

// General-purpose solvers for standard-form linear programs
//     minimize c'x  subject to  A x = b,  x >= 0.
namespace ulamsteer::lp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Eigen::VectorXd;

struct StandardForm {
    SparseMatrix A;
    VectorXd b;
    VectorXd c;
    // Optional a-priori upper bounds on x (never imposed as constraints).
    // When present they turn an approximate dual point into a rigorous
    // lower bound on the optimum; see dual_bound().
    VectorXd upper_hint;

    Eigen::Index rows() const { return A.rows(); }
    Eigen::Index cols() const { return A.cols(); }
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(Status s);

struct Result {
    Status status = Status::NumericalFailure;
    VectorXd x;      // primal point (valid when Optimal)
    VectorXd y;      // row duals
    VectorXd farkas; // when Infeasible: A'y <= 0 and b'y > 0
    double objective = std::numeric_limits<double>::quiet_NaN();
    double dual_bound = -std::numeric_limits<double>::infinity();
    double primal_residual = std::numeric_limits<double>::quiet_NaN(); // max |Ax - b|
    double min_x = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    std::string method;
    std::string message;
};

struct Options {
    // Relative optimality tolerance: objective - dual_bound <= tol * (1 + |objective|).
    double tol = 1e-8;
    int max_iterations = 200;
    // Problems with rows * cols at or below this size use the dense simplex.
    double dense_limit = 2.5e5;
    // Support values below this floor are dropped when polishing an interior
    // point. Optimal masses can be far below any fixed scale (products of
    // many small transition probabilities), so only negatives go by default.
    double polish_floor = 0.0;
    bool verbose = false;
};

/// Dense two-phase tableau simplex with Bland's rule. Exact vertex
/// solutions; meant for small problems.
Result simplex(const StandardForm& lp, const Options& opt = {});

/// Homogeneous self-dual interior point method (Mehrotra predictor-corrector)
/// with sparse normal equations factored by CHOLMOD. Returns the scaled
/// iterate; no polishing.
Result interior_point(const StandardForm& lp, const Options& opt = {});

struct Presolved {
    StandardForm reduced;
    std::vector<Eigen::Index> kept_rows; // reduced row -> original row
    std::vector<Eigen::Index> kept_cols; // reduced col -> original col
    bool infeasible = false;
    bool unbounded = false;
    VectorXd farkas; // original rows, when infeasible
    std::string reason;
    // Columns fixed at zero, in fixing order, and the forcing row of each
    // (-1 for empty columns). Needed to lift reduced-problem certificates.
    std::vector<Eigen::Index> fix_order;
    std::vector<Eigen::Index> fixed_by;
};

/// Removes empty rows, and columns forced to zero by rows with zero
/// right-hand side whose remaining coefficients share one sign. Detected
/// infeasibility comes with a Farkas certificate on the original rows.
Presolved presolve(const StandardForm& lp);

// Maps a Farkas vector of the reduced problem back to the original rows.
VectorXd lift_certificate(const StandardForm& original, const Presolved& pre,
                          const VectorXd& reduced_farkas);

// Checks A'y <= tol * |y|_1 * max|A| and b'y > 0.
bool verify_farkas(const StandardForm& lp, const VectorXd& y, double tol = 1e-9);

// b'y + sum_j min(0, c_j - (A'y)_j) * u_j; -inf without upper hints.
double dual_bound(const StandardForm& lp, const VectorXd& y);

struct PolishReport {
    bool success = false;
    int rounds = 0;
    Eigen::Index support = 0;
    double residual = std::numeric_limits<double>::quiet_NaN();
};

/// Moves x onto {A x = b} using only the columns in `support`, dropping
/// entries that fall below `floor`. Entries outside the support are set to 0.
PolishReport polish(const StandardForm& lp, VectorXd& x, std::vector<char> support, double floor);

/// presolve -> simplex or interior point -> polish -> postsolve.
Result solve(const StandardForm& lp, const Options& opt = {});

// Free-format MPS export.
void write_mps(const StandardForm& lp, std::ostream& out, const std::string& name,
               const std::vector<std::string>& row_names = {},
               const std::vector<std::string>& col_names = {});

} // namespace ulamsteer::lp
