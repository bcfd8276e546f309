#include "ulamsteer/lp.hpp"

#include <algorithm>
#include <cmath>

namespace ulamsteer::lp {

namespace {

// Dense tableau [A | I | b] with artificial columns n..n+m-1.
class Tableau {
public:
    Tableau(const StandardForm& lp) : m_(lp.rows()), n_(lp.cols()) {
        T_ = Eigen::MatrixXd::Zero(m_, n_ + m_ + 1);
        flip_ = VectorXd::Ones(m_);
        const Eigen::MatrixXd A = Eigen::MatrixXd(lp.A);
        for (Eigen::Index r = 0; r < m_; ++r) {
            if (lp.b[r] < 0.0) flip_[r] = -1.0;
            T_.row(r).head(n_) = flip_[r] * A.row(r);
            T_(r, n_ + r) = 1.0;
            T_(r, n_ + m_) = flip_[r] * lp.b[r];
        }
        basis_.resize(static_cast<std::size_t>(m_));
        for (Eigen::Index r = 0; r < m_; ++r) basis_[static_cast<std::size_t>(r)] = n_ + r;
        scale_ = std::max(1.0, A.cwiseAbs().maxCoeff());
    }

    enum class Exit { Optimal, Unbounded, IterationLimit };

    // Minimizes cost over the tableau. Dantzig pricing, with Bland's rule
    // while a run of degenerate pivots lasts; the ratio test breaks ties
    // toward the largest pivot element.
    Exit optimize(const VectorXd& cost, bool allow_artificial, int& iterations, int max_iterations) {
        const double eps_cost = 1e-11 * std::max(1.0, cost.cwiseAbs().maxCoeff());
        const double eps_pivot = 1e-9 * scale_;
        const Eigen::Index limit = allow_artificial ? n_ + m_ : n_;
        int degenerate = 0;
        while (iterations < max_iterations) {
            const VectorXd d = reduced_costs(cost);
            const bool bland = degenerate > 20;
            Eigen::Index enter = -1;
            double most = -eps_cost;
            for (Eigen::Index j = 0; j < limit; ++j) {
                if (d[j] >= most || is_basic(j)) continue;
                enter = j;
                if (bland) break;
                most = d[j];
            }
            if (enter < 0) return Exit::Optimal;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < m_; ++r) {
                const double a = T_(r, enter);
                if (a <= eps_pivot) continue;
                const double ratio = T_(r, n_ + m_) / a;
                if (leave >= 0 && std::abs(ratio - best) <= 1e-12 * std::max(1.0, std::abs(best))) {
                    const bool better = bland ? basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)]
                                              : a > T_(leave, enter);
                    if (better) {
                        leave = r;
                        best = std::min(best, ratio);
                    }
                } else if (ratio < best) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave < 0) return Exit::Unbounded;
            degenerate = T_(leave, n_ + m_) <= 1e-12 ? degenerate + 1 : 0;
            pivot(leave, enter);
            ++iterations;
        }
        return Exit::IterationLimit;
    }

    VectorXd reduced_costs(const VectorXd& cost) const {
        VectorXd cb(m_);
        for (Eigen::Index r = 0; r < m_; ++r) cb[r] = cost[basis_[static_cast<std::size_t>(r)]];
        VectorXd d = cost - (cb.transpose() * T_.leftCols(n_ + m_)).transpose();
        return d;
    }

    void pivot(Eigen::Index r, Eigen::Index j) {
        T_.row(r) /= T_(r, j);
        for (Eigen::Index i = 0; i < m_; ++i)
            if (i != r && T_(i, j) != 0.0) T_.row(i) -= T_(i, j) * T_.row(r);
        basis_[static_cast<std::size_t>(r)] = j;
    }

    bool is_basic(Eigen::Index j) const {
        return std::find(basis_.begin(), basis_.end(), j) != basis_.end();
    }

    // Pivots basic artificials out wherever a structural column is available.
    void drive_out_artificials() {
        const double eps = 1e-9 * scale_;
        for (Eigen::Index r = 0; r < m_; ++r) {
            if (basis_[static_cast<std::size_t>(r)] < n_) continue;
            Eigen::Index best = -1;
            double best_abs = eps;
            for (Eigen::Index j = 0; j < n_; ++j)
                if (!is_basic(j) && std::abs(T_(r, j)) > best_abs) {
                    best_abs = std::abs(T_(r, j));
                    best = j;
                }
            if (best >= 0) pivot(r, best);
        }
    }

    VectorXd primal() const {
        VectorXd x = VectorXd::Zero(n_);
        for (Eigen::Index r = 0; r < m_; ++r) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(r)];
            if (j < n_) x[j] = std::max(0.0, T_(r, n_ + m_));
        }
        return x;
    }

    // Duals of the original rows given the cost used in the last optimize().
    VectorXd duals(const VectorXd& cost) const {
        const VectorXd d = reduced_costs(cost);
        VectorXd y(m_);
        for (Eigen::Index r = 0; r < m_; ++r) y[r] = flip_[r] * (cost[n_ + r] - d[n_ + r]);
        return y;
    }

    double value_of(const VectorXd& cost) const {
        double v = 0.0;
        for (Eigen::Index r = 0; r < m_; ++r) v += cost[basis_[static_cast<std::size_t>(r)]] * T_(r, n_ + m_);
        return v;
    }

private:
    Eigen::Index m_, n_;
    Eigen::MatrixXd T_;
    VectorXd flip_;
    std::vector<Eigen::Index> basis_;
    double scale_ = 1.0;
};

} // namespace

Result simplex(const StandardForm& lp, const Options& opt) {
    Result res;
    res.method = "dense_simplex";
    const Eigen::Index m = lp.rows();
    const Eigen::Index n = lp.cols();
    if (m == 0) {
        res.x = VectorXd::Zero(n);
        res.y = VectorXd::Zero(0);
        if ((lp.c.array() < 0.0).any()) {
            res.status = Status::Unbounded;
            return res;
        }
        res.status = Status::Optimal;
        res.objective = 0.0;
        res.dual_bound = 0.0;
        res.primal_residual = 0.0;
        return res;
    }

    Tableau tab(lp);
    const int max_it = std::max(opt.max_iterations, 50 * static_cast<int>(m + n));

    VectorXd phase1 = VectorXd::Zero(n + m);
    phase1.tail(m).setOnes();
    if (tab.optimize(phase1, true, res.iterations, max_it) == Tableau::Exit::IterationLimit) {
        res.message = "iteration limit in phase I";
        return res;
    }
    const double infeas = tab.value_of(phase1);
    const double feas_tol = 1e-9 * std::max(1.0, lp.b.cwiseAbs().maxCoeff());
    if (infeas > feas_tol) {
        res.status = Status::Infeasible;
        res.farkas = tab.duals(phase1);
        res.message = "phase I optimum " + std::to_string(infeas);
        return res;
    }
    tab.drive_out_artificials();

    VectorXd phase2 = VectorXd::Zero(n + m);
    phase2.head(n) = lp.c;
    const auto exit2 = tab.optimize(phase2, false, res.iterations, max_it);
    if (exit2 == Tableau::Exit::Unbounded) {
        res.status = Status::Unbounded;
        return res;
    }
    if (exit2 == Tableau::Exit::IterationLimit) {
        res.message = "iteration limit in phase II";
        return res;
    }
    res.x = tab.primal();
    res.y = tab.duals(phase2);
    res.objective = lp.c.dot(res.x);
    res.primal_residual = (lp.A * res.x - lp.b).cwiseAbs().maxCoeff();
    res.min_x = n > 0 ? res.x.minCoeff() : 0.0;
    res.dual_bound = lp.upper_hint.size() == n ? dual_bound(lp, res.y) : lp.b.dot(res.y);
    res.status = Status::Optimal;
    return res;
}

} // namespace ulamsteer::lp
