#include "ulamsteer/lp.hpp"

#include <Eigen/CholmodSupport>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ulamsteer::lp {

PolishReport polish(const StandardForm& lp, VectorXd& x, std::vector<char> support, double floor) {
    PolishReport rep;
    const Eigen::Index m = lp.rows();
    const Eigen::Index n = lp.cols();
    const double bnorm = 1.0 + (m > 0 ? lp.b.cwiseAbs().maxCoeff() : 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
        if (!support[static_cast<std::size_t>(j)]) x[j] = 0.0;

    for (rep.rounds = 1; rep.rounds <= 30; ++rep.rounds) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < n; ++j)
            if (support[static_cast<std::size_t>(j)]) cols.push_back(j);
        std::vector<Eigen::Triplet<double, int>> trip;
        for (std::size_t k = 0; k < cols.size(); ++k)
            for (SparseMatrix::InnerIterator it(lp.A, cols[k]); it; ++it)
                trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(k), it.value());
        SparseMatrix AS(m, static_cast<Eigen::Index>(cols.size()));
        AS.setFromTriplets(trip.begin(), trip.end());

        // Minimum-norm correction A_S' z with (A_S A_S' + shift) z = r.
        SparseMatrix K = AS * SparseMatrix(AS.transpose());
        SparseMatrix I(m, m);
        I.setIdentity();
        const double diag = K.rows() > 0 ? std::max(1.0, K.diagonal().maxCoeff()) : 1.0;
        K += 1e-13 * diag * I;
        Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> llt(K);
        if (llt.info() != Eigen::Success) return rep;

        VectorXd xs(static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) xs[static_cast<Eigen::Index>(k)] = x[cols[k]];
        // K is singular along the conserved-mass directions, so refinement
        // may need several rounds; stop once it no longer halves the residual.
        double last = std::numeric_limits<double>::infinity();
        for (int refine = 0; refine < 40; ++refine) {
            const VectorXd r = lp.b - AS * xs;
            const double res = r.cwiseAbs().maxCoeff();
            if (res <= 1e-15 * bnorm || res > 0.5 * last) break;
            last = res;
            xs += AS.transpose() * llt.solve(r);
        }
        bool dropped = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            double v = xs[static_cast<Eigen::Index>(k)];
            if (v < floor) {
                support[static_cast<std::size_t>(cols[k])] = 0;
                v = 0.0;
                dropped = true;
            }
            x[cols[k]] = v;
        }
        rep.support = static_cast<Eigen::Index>(cols.size());
        rep.residual = (lp.A * x - lp.b).cwiseAbs().maxCoeff();
        if (!dropped) {
            rep.success = rep.residual <= 1e-13 * bnorm;
            return rep;
        }
    }
    return rep;
}

namespace {

Result finish(const StandardForm& lp, Result r) {
    if (r.status != Status::Optimal) return r;
    r.objective = lp.c.dot(r.x);
    r.primal_residual = lp.rows() > 0 ? (lp.A * r.x - lp.b).cwiseAbs().maxCoeff() : 0.0;
    r.min_x = lp.cols() > 0 ? r.x.minCoeff() : 0.0;
    return r;
}

} // namespace

Result solve(const StandardForm& lp, const Options& opt) {
    const Presolved pre = presolve(lp);
    Result res;
    if (pre.infeasible) {
        res.status = Status::Infeasible;
        res.method = "presolve";
        res.farkas = pre.farkas;
        res.message = pre.reason;
        return res;
    }
    if (pre.unbounded) {
        res.status = Status::Unbounded;
        res.method = "presolve";
        res.message = pre.reason;
        return res;
    }

    const StandardForm& red = pre.reduced;
    if (opt.verbose)
        std::fprintf(stderr, "presolve: %ld x %ld -> %ld x %ld\n", static_cast<long>(lp.rows()),
                     static_cast<long>(lp.cols()), static_cast<long>(red.rows()), static_cast<long>(red.cols()));
    const double size = static_cast<double>(red.rows()) * static_cast<double>(red.cols());
    Result inner = size <= opt.dense_limit ? simplex(red, opt) : interior_point(red, opt);
    if (inner.method == "dense_simplex" && inner.status == Status::Infeasible &&
        !verify_farkas(lp, lift_certificate(lp, pre, inner.farkas), 1e-7)) {
        inner.status = Status::NumericalFailure;
        inner.message += "; certificate failed verification";
    }
    if (inner.method == "dense_simplex" && inner.status == Status::NumericalFailure) {
        if (opt.verbose) std::fprintf(stderr, "simplex: %s; retrying with interior point\n", inner.message.c_str());
        inner = interior_point(red, opt);
    }

    if (inner.status == Status::Infeasible) {
        res.status = Status::Infeasible;
        res.method = inner.method;
        res.farkas = lift_certificate(lp, pre, inner.farkas);
        res.message = inner.message;
        if (!verify_farkas(lp, res.farkas, 1e-7)) {
            res.status = Status::NumericalFailure;
            res.message += "; infeasibility certificate failed verification";
        }
        return res;
    }
    // A stalled interior point run may still be close enough to polish and
    // certify; the gap test below decides.
    const bool salvage = inner.method == "interior_point" && inner.status == Status::NumericalFailure &&
                         inner.x.size() == red.cols() && inner.x.allFinite() && inner.y.allFinite();
    if (inner.status != Status::Optimal && !salvage) {
        res = inner;
        res.x.resize(0);
        return res;
    }
    if (salvage) {
        inner.status = Status::Optimal;
        for (Eigen::Index j = 0; j < inner.x.size(); ++j) inner.x[j] = std::max(0.0, inner.x[j]);
    }

    if (inner.method == "interior_point") {
        // The interior iterate is strictly positive; snap it to the support of
        // the optimal face so that zero masses are exactly zero.
        const double xmax = inner.x.size() > 0 ? inner.x.maxCoeff() : 0.0;
        PolishReport rep;
        VectorXd best;
        for (double rel : {1e-8, 1e-10, 1e-12, 1e-14}) {
            VectorXd trial = inner.x;
            std::vector<char> support(static_cast<std::size_t>(trial.size()));
            for (Eigen::Index j = 0; j < trial.size(); ++j)
                support[static_cast<std::size_t>(j)] = trial[j] > rel * xmax;
            rep = polish(red, trial, std::move(support), opt.polish_floor);
            if (rep.success) {
                best = std::move(trial);
                break;
            }
        }
        if (!rep.success) {
            inner.status = Status::NumericalFailure;
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "could not polish the interior solution onto its support (residual %.3e, %d rounds)",
                          rep.residual, rep.rounds);
            inner.message = buf;
        } else {
            inner.x = std::move(best);
            inner.message = (salvage ? "stalled iterate " : "") + std::string("polished onto ") +
                            std::to_string(rep.support) + " support columns in " + std::to_string(rep.rounds) +
                            " rounds";
        }
    }

    res = inner;
    res.x = VectorXd::Zero(lp.cols());
    for (std::size_t j = 0; j < pre.kept_cols.size(); ++j)
        res.x[pre.kept_cols[j]] = inner.x[static_cast<Eigen::Index>(j)];
    res.y = VectorXd::Zero(lp.rows());
    for (std::size_t r = 0; r < pre.kept_rows.size(); ++r)
        res.y[pre.kept_rows[r]] = inner.y[static_cast<Eigen::Index>(r)];
    if (red.upper_hint.size() == red.cols())
        res.dual_bound = dual_bound(red, inner.y);
    else if (inner.method == "dense_simplex")
        res.dual_bound = red.b.dot(inner.y);
    res = finish(lp, std::move(res));

    if (res.status == Status::Optimal) {
        const double gap = res.objective - res.dual_bound;
        if (!(gap <= opt.tol * (1.0 + std::abs(res.objective)))) {
            res.status = Status::NumericalFailure;
            res.message += "; optimality gap " + std::to_string(gap) + " exceeds tolerance";
        }
    }
    return res;
}

} // namespace ulamsteer::lp
