#include "ulamsteer/lp.hpp"

#include <Eigen/CholmodSupport>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ulamsteer::lp {

namespace {

// Normal-equation solver for A diag(theta) A' with a relative diagonal shift.
class NormalEquations {
public:
    explicit NormalEquations(const SparseMatrix& A) : A_(A), At_(A.transpose()) {}

    bool factor(const VectorXd& theta, double shift) {
        theta_ = theta;
        const SparseMatrix AD = A_ * theta.asDiagonal();
        M_ = AD * At_;
        M_.makeCompressed();
        // Shift relative to the diagonal, with an absolute floor for rows whose
        // columns have all collapsed to zero.
        double dmax = 0.0;
        for (Eigen::Index r = 0; r < M_.rows(); ++r) dmax = std::max(dmax, M_.coeff(r, r));
        for (Eigen::Index r = 0; r < M_.rows(); ++r) {
            double& d = M_.coeffRef(r, r);
            d += shift * d + 1e-4 * shift * std::max(1.0, dmax);
        }
        if (!analyzed_) {
            llt_.analyzePattern(M_);
            analyzed_ = true;
        }
        llt_.factorize(M_);
        return llt_.info() == Eigen::Success;
    }

    // Iterative refinement against the unshifted A diag(theta) A'. The shift
    // keeps the factorization alive on nearly dependent rows; refinement
    // removes most of its bias without amplifying the near-null directions.
    VectorXd solve(const VectorXd& rhs) const {
        VectorXd x = llt_.solve(rhs);
        VectorXd r = rhs - apply(x);
        double rnorm = r.cwiseAbs().maxCoeff();
        const double target = 1e-15 * std::max(1.0, rhs.cwiseAbs().maxCoeff());
        for (int it = 0; it < 8 && rnorm > target; ++it) {
            const VectorXd x_next = x + llt_.solve(r);
            const VectorXd r_next = rhs - apply(x_next);
            const double n_next = r_next.cwiseAbs().maxCoeff();
            if (!(n_next < 0.5 * rnorm)) break;
            x = x_next;
            r = r_next;
            rnorm = n_next;
        }
        return x;
    }

private:
    VectorXd apply(const VectorXd& v) const { return A_ * theta_.cwiseProduct(At_ * v); }

    const SparseMatrix& A_;
    SparseMatrix At_;
    SparseMatrix M_;
    VectorXd theta_;
    Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt_;
    bool analyzed_ = false;
};

double max_step(const VectorXd& v, const VectorXd& dv) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
}

double max_step(double v, double dv) {
    return dv < 0.0 ? -v / dv : std::numeric_limits<double>::infinity();
}

} // namespace

Result interior_point(const StandardForm& lp, const Options& opt) {
    Result res;
    res.method = "interior_point";
    const SparseMatrix& A = lp.A;
    const VectorXd& b = lp.b;
    const VectorXd& c = lp.c;
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();

    VectorXd x = VectorXd::Ones(n);
    VectorXd s = VectorXd::Ones(n);
    VectorXd y = VectorXd::Zero(m);
    double tau = 1.0, kappa = 1.0;

    const double bnorm = 1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
    const double cnorm = 1.0 + (n > 0 ? c.cwiseAbs().maxCoeff() : 0.0);
    // Feasibility is restored exactly by polishing; optimality is certified
    // afterwards by the dual bound, so the primal test can be moderate.
    const double tol_p = 1e-9, tol_d = 1e-9, tol_gap = std::min(1e-10, 0.01 * opt.tol);

    NormalEquations ne(A);
    double shift = 1e-12;
    double best_mu = std::numeric_limits<double>::infinity();
    int stall = 0;
    double best_merit = std::numeric_limits<double>::infinity();
    VectorXd best_x, best_y;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it;
        const double mu = (x.dot(s) + tau * kappa) / static_cast<double>(n + 1);
        const VectorXd Ax = A * x;
        const VectorXd Aty = A.transpose() * y;
        const VectorXd r_p = b * tau - Ax;
        const VectorXd r_d = c * tau - Aty - s;
        const double pobj = c.dot(x), dobj = b.dot(y);
        const double r_g = kappa + pobj - dobj;

        const double pinf = r_p.cwiseAbs().maxCoeff() / (tau * bnorm);
        const double dinf = (n > 0 ? r_d.cwiseAbs().maxCoeff() : 0.0) / (tau * cnorm);
        const double gap = std::abs(pobj - dobj) / (tau + std::abs(pobj));
        if (opt.verbose)
            std::fprintf(stderr, "ipm %3d  pinf %.2e dinf %.2e gap %.2e mu %.2e tau %.2e kappa %.2e\n",
                         it, pinf, dinf, gap, mu, tau, kappa);

        if (pinf <= tol_p && dinf <= tol_d && gap <= tol_gap) {
            res.status = Status::Optimal;
            res.x = x / tau;
            res.y = y / tau;
            res.objective = c.dot(res.x);
            res.primal_residual = (A * res.x - b).cwiseAbs().maxCoeff();
            res.min_x = res.x.minCoeff();
            res.dual_bound = dual_bound(lp, res.y);
            return res;
        }
        // Infeasibility: tau has collapsed relative to kappa along a ray.
        if (tau < 1e-9 * std::max(1.0, kappa)) {
            if (dobj > 0.0 && (Aty + s).cwiseAbs().maxCoeff() <= 1e-8 * dobj) {
                res.status = Status::Infeasible;
                res.farkas = y / dobj;
                res.message = "interior point: primal infeasibility ray";
                return res;
            }
            if (pobj < 0.0 && Ax.cwiseAbs().maxCoeff() <= 1e-8 * -pobj) {
                res.status = Status::Unbounded;
                res.message = "interior point: dual infeasibility ray";
                return res;
            }
        }
        const double merit = std::max({pinf / tol_p, dinf / tol_d, gap / tol_gap});
        if (merit < best_merit) {
            best_merit = merit;
            best_x = x / tau;
            best_y = y / tau;
        }
        if (mu < 0.5 * best_mu) {
            best_mu = mu;
            stall = 0;
        } else if (++stall > 15) {
            break;
        }

        const VectorXd theta = x.cwiseQuotient(s);
        bool ok = ne.factor(theta, shift);
        while (!ok && shift < 1e-4) {
            shift *= 100.0;
            ok = ne.factor(theta, shift);
        }
        if (!ok) break;

        const VectorXd q = ne.solve(A * theta.cwiseProduct(c) + b);
        const VectorXd v = theta.cwiseProduct(A.transpose() * q - c);
        const VectorXd Atq_c = A.transpose() * q - c;
        const double denom = Atq_c.dot(theta.cwiseProduct(Atq_c)) + kappa / tau;

        struct Dir {
            VectorXd dx, dy, ds;
            double dtau, dkappa;
        };
        auto direction = [&](double eta, const VectorXd& r_xs, double r_tk) {
            const VectorXd xinv_rxs = r_xs.cwiseQuotient(x);
            const VectorXd rhs = eta * r_p + A * theta.cwiseProduct(eta * r_d - xinv_rxs);
            const VectorXd p = ne.solve(rhs);
            const VectorXd u = theta.cwiseProduct(A.transpose() * p - eta * r_d + xinv_rxs);
            Dir d;
            d.dtau = (eta * r_g - b.dot(p) + c.dot(u) + r_tk / tau) / denom;
            d.dx = u + v * d.dtau;
            d.dy = p + q * d.dtau;
            d.ds = (r_xs - s.cwiseProduct(d.dx)).cwiseQuotient(x);
            d.dkappa = (r_tk - kappa * d.dtau) / tau;
            return d;
        };
        auto step_to_boundary = [&](const Dir& d) {
            return std::min({max_step(x, d.dx), max_step(s, d.ds), max_step(tau, d.dtau),
                             max_step(kappa, d.dkappa)});
        };

        const VectorXd xs = x.cwiseProduct(s);
        const Dir aff = direction(1.0, -xs, -tau * kappa);
        const double a_aff = std::min(1.0, step_to_boundary(aff));
        const double mu_aff = ((x + a_aff * aff.dx).dot(s + a_aff * aff.ds) +
                               (tau + a_aff * aff.dtau) * (kappa + a_aff * aff.dkappa)) /
                              static_cast<double>(n + 1);
        const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

        const VectorXd r_xs = -xs - aff.dx.cwiseProduct(aff.ds) + VectorXd::Constant(n, sigma * mu);
        const double r_tk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
        const Dir d = direction(1.0 - sigma, r_xs, r_tk);
        const double a = std::min(1.0, 0.995 * step_to_boundary(d));

        x += a * d.dx;
        s += a * d.ds;
        y += a * d.dy;
        tau += a * d.dtau;
        kappa += a * d.dkappa;
    }

    // The best iterate is returned so that the caller may still polish and
    // certify it.
    res.status = Status::NumericalFailure;
    res.x = best_x.size() ? best_x : VectorXd(x / tau);
    res.y = best_y.size() ? best_y : VectorXd(y / tau);
    res.objective = c.dot(res.x);
    res.primal_residual = (A * res.x - b).cwiseAbs().maxCoeff();
    res.message = "interior point stalled or hit the iteration limit";
    return res;
}

} // namespace ulamsteer::lp
