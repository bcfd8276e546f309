#include "ulamsteer/transport.hpp"

#include "ulamsteer/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ulamsteer {

namespace {

using Triplet = Eigen::Triplet<double, int>;

void check_measure(const Measure& m, std::size_t n, const char* what) {
    if (m.size() != n)
        throw InvalidArgument(std::string(what) + " has " + std::to_string(m.size()) +
                              " cells, expected " + std::to_string(n));
    m.validate();
}

// Rows of the nu-only form: block n < N holds sum_k nu_n^{k,j} - inflow_n^j,
// block N holds the terminal pin.
lp::StandardForm build_nu_form(const TransitionTensor& T, const CostTable& costs,
                               const Measure& mu0, const Measure& muf, std::size_t N) {
    const std::size_t nx = T.n_cells, nu = T.n_controls;
    const auto cols = static_cast<Eigen::Index>(N * nu * nx);
    const auto rows = static_cast<Eigen::Index>((N + 1) * nx);
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(cols) + N * T.nonzeros());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i) {
                const int col = static_cast<int>((n * nu + k) * nx + i);
                trip.emplace_back(static_cast<int>(n * nx + i), col, 1.0);
                const double sign = n + 1 < N ? -1.0 : 1.0;
                for (SparseRowMatrix::InnerIterator it(T.P[k], static_cast<Eigen::Index>(i)); it; ++it)
                    trip.emplace_back(static_cast<int>((n + 1) * nx + static_cast<std::size_t>(it.col())),
                                      col, sign * it.value());
            }
    lp::StandardForm f;
    f.A.resize(rows, cols);
    f.A.setFromTriplets(trip.begin(), trip.end());
    f.A.makeCompressed();
    f.b = Eigen::VectorXd::Zero(rows);
    for (std::size_t j = 0; j < nx; ++j) {
        f.b[static_cast<Eigen::Index>(j)] = mu0[j];
        f.b[static_cast<Eigen::Index>(N * nx + j)] = muf[j];
    }
    f.c.resize(cols);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i)
                f.c[static_cast<Eigen::Index>((n * nu + k) * nx + i)] = costs(i, k);
    // Every nu entry is a mass of a probability measure.
    f.upper_hint = Eigen::VectorXd::Ones(cols);
    return f;
}

} // namespace

LPProblem assemble(const TransitionTensor& tensor, const CostTable& costs, const Measure& mu0,
                   const Measure& muf, std::size_t horizon) {
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (tensor.P.size() != tensor.n_controls) throw InvalidArgument("tensor is missing control slices");
    if (costs.n_cells() != tensor.n_cells || costs.n_controls() != tensor.n_controls)
        throw InvalidArgument("cost table does not match the tensor dimensions");
    check_measure(mu0, tensor.n_cells, "initial measure");
    check_measure(muf, tensor.n_cells, "target measure");

    LPProblem p;
    p.n_cells = tensor.n_cells;
    p.n_controls = tensor.n_controls;
    p.horizon = horizon;
    p.mu0 = mu0.weights;
    p.muf = muf.weights;
    const std::size_t nx = p.n_cells, nu = p.n_controls, N = horizon;

    const Eigen::Index cols = p.n_nu() + static_cast<Eigen::Index>((N - 1) * nx);
    const Eigen::Index rows = static_cast<Eigen::Index>(2 * N * nx + N);
    std::vector<Triplet> trip;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i) {
                const auto col = static_cast<int>(p.nu_col(n, k, i));
                trip.emplace_back(static_cast<int>(p.marginal_row(n, i)), col, 1.0);
                const double sign = n + 1 < N ? -1.0 : 1.0;
                double pushed = 0.0;
                for (SparseRowMatrix::InnerIterator it(tensor.P[k], static_cast<Eigen::Index>(i)); it; ++it) {
                    trip.emplace_back(static_cast<int>(p.pushforward_row(n, static_cast<std::size_t>(it.col()))),
                                      col, sign * it.value());
                    pushed += it.value();
                }
                if (n + 1 == N) trip.emplace_back(static_cast<int>(p.normalization_row(n)), col, pushed);
            }
    for (std::size_t n = 1; n < N; ++n)
        for (std::size_t i = 0; i < nx; ++i) {
            const auto col = static_cast<int>(p.mu_col(n, i));
            trip.emplace_back(static_cast<int>(p.pushforward_row(n - 1, i)), col, 1.0);
            trip.emplace_back(static_cast<int>(p.normalization_row(n - 1)), col, 1.0);
            trip.emplace_back(static_cast<int>(p.marginal_row(n, i)), col, -1.0);
        }
    p.form.A.resize(rows, cols);
    p.form.A.setFromTriplets(trip.begin(), trip.end());
    p.form.A.makeCompressed();

    p.form.b = Eigen::VectorXd::Zero(rows);
    for (std::size_t j = 0; j < nx; ++j) {
        p.form.b[p.pushforward_row(N - 1, j)] = muf[j];
        p.form.b[p.marginal_row(0, j)] = mu0[j];
    }
    for (std::size_t n = 0; n < N; ++n) p.form.b[p.normalization_row(n)] = 1.0;

    p.form.c = Eigen::VectorXd::Zero(cols);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i) p.form.c[p.nu_col(n, k, i)] = costs(i, k);
    p.form.upper_hint = Eigen::VectorXd::Ones(cols);

    p.nu_form = build_nu_form(tensor, costs, mu0, muf, N);
    return p;
}

std::vector<std::string> LPProblem::row_names() const {
    std::vector<std::string> names(static_cast<std::size_t>(form.rows()));
    for (std::size_t n = 0; n < horizon; ++n) {
        for (std::size_t j = 0; j < n_cells; ++j) {
            names[static_cast<std::size_t>(pushforward_row(n, j))] =
                n + 1 < horizon ? "push_" + std::to_string(n) + "_" + std::to_string(j)
                                : "term_" + std::to_string(j);
            names[static_cast<std::size_t>(marginal_row(n, j))] =
                "marg_" + std::to_string(n) + "_" + std::to_string(j);
        }
        names[static_cast<std::size_t>(normalization_row(n))] = "norm_" + std::to_string(n + 1);
    }
    return names;
}

std::vector<std::string> LPProblem::column_names() const {
    std::vector<std::string> names(static_cast<std::size_t>(form.cols()));
    for (std::size_t n = 0; n < horizon; ++n)
        for (std::size_t k = 0; k < n_controls; ++k)
            for (std::size_t i = 0; i < n_cells; ++i)
                names[static_cast<std::size_t>(nu_col(n, k, i))] =
                    "nu_" + std::to_string(n) + "_" + std::to_string(k) + "_" + std::to_string(i);
    for (std::size_t n = 1; n < horizon; ++n)
        for (std::size_t i = 0; i < n_cells; ++i)
            names[static_cast<std::size_t>(mu_col(n, i))] = "mu_" + std::to_string(n) + "_" + std::to_string(i);
    return names;
}

void write_mps(const LPProblem& problem, std::ostream& out) {
    lp::write_mps(problem.form, out, "transport", problem.row_names(), problem.column_names());
}

namespace {

// Maps a certificate of the nu-only form onto the rows of the full form. A
// nu-form row of block n >= 1 is the sum of marginal row n and pushforward
// row n-1, so both receive its multiplier; the mu columns then cancel.
Eigen::VectorXd lift_to_full(const LPProblem& p, const Eigen::VectorXd& w) {
    const std::size_t nx = p.n_cells, N = p.horizon;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(p.form.rows());
    for (std::size_t j = 0; j < nx; ++j) {
        y[p.marginal_row(0, j)] = w[static_cast<Eigen::Index>(j)];
        y[p.pushforward_row(N - 1, j)] = w[static_cast<Eigen::Index>(N * nx + j)];
        for (std::size_t n = 1; n < N; ++n) {
            const double v = w[static_cast<Eigen::Index>(n * nx + j)];
            y[p.marginal_row(n, j)] = v;
            y[p.pushforward_row(n - 1, j)] = v;
        }
    }
    return y;
}

} // namespace

SolveOutcome solve(const LPProblem& problem, const TransportOptions& options) {
    SolveOutcome out;
    const lp::Result r = lp::solve(problem.nu_form, options.lp);
    out.status = r.status;
    out.note = r.message;

    if (r.status == lp::Status::Infeasible) {
        out.certificate = lift_to_full(problem, r.farkas);
        out.certificate_verified = lp::verify_farkas(problem.form, out.certificate, 1e-7);
        out.note = "infeasible (" + r.method + "): " + r.message +
                   (out.certificate_verified ? "; Farkas certificate verified on the full problem"
                                             : "; certificate failed verification");
        if (!out.certificate_verified) out.status = lp::Status::NumericalFailure;
        return out;
    }
    if (r.status != lp::Status::Optimal) return out;

    const std::size_t nx = problem.n_cells, nu = problem.n_controls, N = problem.horizon;
    TransportSolution s;
    s.n_cells = nx;
    s.n_controls = nu;
    s.horizon = N;
    s.method = r.method;
    s.iterations = r.iterations;
    s.dual_bound = r.dual_bound;
    s.nu.assign(N, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(nx)));
    double min_raw = 0.0, clipped = 0.0;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i) {
                double v = r.x[problem.nu_col(n, k, i)];
                min_raw = std::min(min_raw, v);
                if (v < 0.0) {
                    clipped -= v;
                    v = 0.0;
                }
                s.nu[n](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = v;
            }

    // mu_0 is data, mu_n is the marginal of nu_n, mu_N the image of nu_{N-1}.
    s.mu.assign(N + 1, std::vector<double>(nx, 0.0));
    s.mu[0] = problem.mu0;
    for (std::size_t n = 1; n < N; ++n)
        for (std::size_t i = 0; i < nx; ++i) s.mu[n][i] = s.nu[n].col(static_cast<Eigen::Index>(i)).sum();
    // Image of nu_n under the chain, read back from the nu-form columns.
    auto pushed = [&](std::size_t n) {
        std::vector<double> out_mass(nx, 0.0);
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i) {
                const double v = s.nu[n](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
                if (v == 0.0) continue;
                const Eigen::Index col = problem.nu_col(n, k, i);
                for (lp::SparseMatrix::InnerIterator it(problem.nu_form.A, col); it; ++it) {
                    const auto row = static_cast<std::size_t>(it.row());
                    if (row >= (n + 1) * nx && row < (n + 2) * nx)
                        out_mass[row - (n + 1) * nx] += std::abs(it.value()) * v;
                }
            }
        return out_mass;
    };
    s.mu[N] = pushed(N - 1);

    TransportResiduals& res = s.residuals;
    res.min_mass = min_raw;
    res.clipped_mass = clipped;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < nx; ++i)
            res.marginal = std::max(res.marginal,
                                    std::abs(s.nu[n].col(static_cast<Eigen::Index>(i)).sum() - s.mu[n][i]));
        const std::vector<double> img = n + 1 < N ? pushed(n) : s.mu[N];
        for (std::size_t j = 0; j < nx; ++j)
            res.pushforward = std::max(res.pushforward, std::abs(s.mu[n + 1][j] - img[j]));
    }
    for (std::size_t n = 0; n <= N; ++n) {
        double t = 0.0;
        for (double v : s.mu[n]) t += v;
        res.normalization = std::max(res.normalization, std::abs(t - 1.0));
    }
    res.terminal_l1 = l1_distance(s.mu[N], problem.muf);

    s.objective = 0.0;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t i = 0; i < nx; ++i)
                s.objective += problem.nu_form.c[problem.nu_col(n, k, i)] *
                               s.nu[n](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));

    std::string failure;
    if (min_raw < -options.negativity_tol) failure += "; negative mass " + std::to_string(min_raw);
    if (res.terminal_l1 > options.terminal_tol)
        failure += "; terminal residual " + std::to_string(res.terminal_l1);
    if (res.marginal > options.consistency_tol) failure += "; marginal residual " + std::to_string(res.marginal);
    if (res.pushforward > options.consistency_tol)
        failure += "; pushforward residual " + std::to_string(res.pushforward);
    if (!failure.empty()) {
        out.status = lp::Status::NumericalFailure;
        out.note += failure;
    }
    out.solution = std::move(s);
    return out;
}

double transport_cost(const CostTable& costs, const TransportSolution& sol) {
    double total = 0.0;
    for (const auto& m : sol.nu)
        for (Eigen::Index k = 0; k < m.rows(); ++k)
            for (Eigen::Index i = 0; i < m.cols(); ++i) total += costs(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) * m(k, i);
    return total;
}

} // namespace ulamsteer
