#include "ulamsteer/lp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

namespace ulamsteer::lp {

const char* to_string(Status s) {
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

namespace {

using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

double column_dot(const SparseMatrix& A, Eigen::Index j, const VectorXd& y) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) s += it.value() * y[it.row()];
    return s;
}

// Makes A'y <= 0 on columns fixed by forcing rows. Columns are visited in
// reverse fixing order; a multiple of the forcing row cancels a positive
// entry without disturbing later-fixed columns or b'y (forcing rows have b = 0).
void repair_certificate(const StandardForm& lp, const std::vector<Eigen::Index>& fix_order,
                        const std::vector<Eigen::Index>& fixed_by, VectorXd& y) {
    for (auto it = fix_order.rbegin(); it != fix_order.rend(); ++it) {
        const Eigen::Index j = *it;
        const Eigen::Index f = fixed_by[static_cast<std::size_t>(j)];
        if (f < 0) continue;
        const double v = column_dot(lp.A, j, y);
        if (v <= 0.0) continue;
        const double a = lp.A.coeff(f, j);
        const double sigma = a > 0.0 ? 1.0 : -1.0;
        y[f] -= sigma * v / std::abs(a);
    }
}

} // namespace

VectorXd lift_certificate(const StandardForm& original, const Presolved& pre,
                          const VectorXd& reduced_farkas) {
    VectorXd y = VectorXd::Zero(original.rows());
    for (std::size_t r = 0; r < pre.kept_rows.size(); ++r)
        y[pre.kept_rows[r]] = reduced_farkas[static_cast<Eigen::Index>(r)];
    repair_certificate(original, pre.fix_order, pre.fixed_by, y);
    return y;
}

Presolved presolve(const StandardForm& lp) {
    const Eigen::Index m = lp.rows();
    const Eigen::Index n = lp.cols();
    const RowMatrix R = lp.A;

    std::vector<char> col_active(static_cast<std::size_t>(n), 1);
    std::vector<char> row_active(static_cast<std::size_t>(m), 1);
    // For each fixed column, the forcing row that fixed it (-1: empty column).
    std::vector<Eigen::Index> fixed_by(static_cast<std::size_t>(n), -1);
    std::vector<Eigen::Index> fix_order;

    Presolved out;

    for (Eigen::Index j = 0; j < n; ++j) {
        bool empty = true;
        for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it)
            if (it.value() != 0.0) empty = false;
        if (!empty) continue;
        if (lp.c[j] < 0.0) {
            out.unbounded = true;
            out.reason = "column " + std::to_string(j) + " is empty with negative cost";
            return out;
        }
        col_active[static_cast<std::size_t>(j)] = 0;
        fix_order.push_back(j);
    }

    std::deque<Eigen::Index> queue;
    std::vector<char> queued(static_cast<std::size_t>(m), 1);
    for (Eigen::Index r = 0; r < m; ++r) queue.push_back(r);

    Eigen::Index contradiction = -1;
    while (!queue.empty() && contradiction < 0) {
        const Eigen::Index r = queue.front();
        queue.pop_front();
        queued[static_cast<std::size_t>(r)] = 0;
        if (!row_active[static_cast<std::size_t>(r)]) continue;

        int n_pos = 0, n_neg = 0;
        for (RowMatrix::InnerIterator it(R, r); it; ++it) {
            if (!col_active[static_cast<std::size_t>(it.col())] || it.value() == 0.0) continue;
            (it.value() > 0.0 ? n_pos : n_neg)++;
        }
        const double br = lp.b[r];
        if (n_pos + n_neg == 0) {
            if (br != 0.0) {
                contradiction = r;
                out.reason = "row " + std::to_string(r) + " has no free columns but rhs " +
                             std::to_string(br);
            } else {
                row_active[static_cast<std::size_t>(r)] = 0;
            }
            continue;
        }
        const bool one_sign = n_pos == 0 || n_neg == 0;
        if (!one_sign) continue;
        const double sign = n_pos > 0 ? 1.0 : -1.0;
        if (br * sign < 0.0) {
            contradiction = r;
            out.reason = "row " + std::to_string(r) + " cannot reach its rhs with nonnegative columns";
            continue;
        }
        if (br != 0.0) continue;
        // Forcing row: every free column in it must vanish.
        for (RowMatrix::InnerIterator it(R, r); it; ++it) {
            const Eigen::Index j = it.col();
            if (!col_active[static_cast<std::size_t>(j)] || it.value() == 0.0) continue;
            col_active[static_cast<std::size_t>(j)] = 0;
            fixed_by[static_cast<std::size_t>(j)] = r;
            fix_order.push_back(j);
            for (SparseMatrix::InnerIterator jt(lp.A, j); jt; ++jt) {
                const Eigen::Index rr = jt.row();
                if (row_active[static_cast<std::size_t>(rr)] && !queued[static_cast<std::size_t>(rr)]) {
                    queued[static_cast<std::size_t>(rr)] = 1;
                    queue.push_back(rr);
                }
            }
        }
        row_active[static_cast<std::size_t>(r)] = 0;
    }

    out.fix_order = fix_order;
    out.fixed_by = fixed_by;
    if (contradiction >= 0) {
        // y = sign * e_r is a certificate on the free columns.
        VectorXd y = VectorXd::Zero(m);
        y[contradiction] = lp.b[contradiction] < 0.0 ? -1.0 : 1.0;
        repair_certificate(lp, fix_order, fixed_by, y);
        out.infeasible = true;
        out.farkas = std::move(y);
        return out;
    }

    std::vector<Eigen::Index> row_map(static_cast<std::size_t>(m), -1);
    std::vector<Eigen::Index> col_map(static_cast<std::size_t>(n), -1);
    for (Eigen::Index r = 0; r < m; ++r)
        if (row_active[static_cast<std::size_t>(r)]) {
            row_map[static_cast<std::size_t>(r)] = static_cast<Eigen::Index>(out.kept_rows.size());
            out.kept_rows.push_back(r);
        }
    for (Eigen::Index j = 0; j < n; ++j)
        if (col_active[static_cast<std::size_t>(j)]) {
            col_map[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(out.kept_cols.size());
            out.kept_cols.push_back(j);
        }

    const auto mr = static_cast<Eigen::Index>(out.kept_rows.size());
    const auto nr = static_cast<Eigen::Index>(out.kept_cols.size());
    std::vector<Eigen::Triplet<double, int>> trip;
    for (Eigen::Index jr = 0; jr < nr; ++jr) {
        const Eigen::Index j = out.kept_cols[static_cast<std::size_t>(jr)];
        for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) {
            const Eigen::Index rr = row_map[static_cast<std::size_t>(it.row())];
            // An active column only meets active rows: deactivated rows had no
            // free columns left.
            if (rr >= 0 && it.value() != 0.0)
                trip.emplace_back(static_cast<int>(rr), static_cast<int>(jr), it.value());
        }
    }
    out.reduced.A.resize(mr, nr);
    out.reduced.A.setFromTriplets(trip.begin(), trip.end());
    out.reduced.A.makeCompressed();
    out.reduced.b.resize(mr);
    for (Eigen::Index r = 0; r < mr; ++r) out.reduced.b[r] = lp.b[out.kept_rows[static_cast<std::size_t>(r)]];
    out.reduced.c.resize(nr);
    for (Eigen::Index j = 0; j < nr; ++j) out.reduced.c[j] = lp.c[out.kept_cols[static_cast<std::size_t>(j)]];
    if (lp.upper_hint.size() == n) {
        out.reduced.upper_hint.resize(nr);
        for (Eigen::Index j = 0; j < nr; ++j)
            out.reduced.upper_hint[j] = lp.upper_hint[out.kept_cols[static_cast<std::size_t>(j)]];
    }
    return out;
}

bool verify_farkas(const StandardForm& lp, const VectorXd& y, double tol) {
    if (y.size() != lp.rows()) return false;
    const double by = lp.b.dot(y);
    if (!(by > 0.0)) return false;
    double amax = 0.0;
    for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) amax = std::max(amax, std::abs(it.value()));
    const double scale = tol * std::max(1.0, y.lpNorm<1>() * amax);
    for (Eigen::Index j = 0; j < lp.cols(); ++j)
        if (column_dot(lp.A, j, y) > scale) return false;
    return by > scale;
}

double dual_bound(const StandardForm& lp, const VectorXd& y) {
    if (lp.upper_hint.size() != lp.cols() || y.size() != lp.rows())
        return -std::numeric_limits<double>::infinity();
    double bound = lp.b.dot(y);
    for (Eigen::Index j = 0; j < lp.cols(); ++j) {
        const double s = lp.c[j] - column_dot(lp.A, j, y);
        if (s < 0.0) bound += s * lp.upper_hint[j];
    }
    return bound;
}

void write_mps(const StandardForm& lp, std::ostream& out, const std::string& name,
               const std::vector<std::string>& row_names, const std::vector<std::string>& col_names) {
    auto rname = [&](Eigen::Index r) {
        return static_cast<std::size_t>(r) < row_names.size() ? row_names[static_cast<std::size_t>(r)]
                                                              : "R" + std::to_string(r);
    };
    auto cname = [&](Eigen::Index j) {
        return static_cast<std::size_t>(j) < col_names.size() ? col_names[static_cast<std::size_t>(j)]
                                                              : "C" + std::to_string(j);
    };
    const auto old_prec = out.precision(17);
    out << "NAME " << name << "\nROWS\n N COST\n";
    for (Eigen::Index r = 0; r < lp.rows(); ++r) out << " E " << rname(r) << "\n";
    out << "COLUMNS\n";
    for (Eigen::Index j = 0; j < lp.cols(); ++j) {
        if (lp.c[j] != 0.0) out << " " << cname(j) << " COST " << lp.c[j] << "\n";
        for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it)
            out << " " << cname(j) << " " << rname(it.row()) << " " << it.value() << "\n";
    }
    out << "RHS\n";
    for (Eigen::Index r = 0; r < lp.rows(); ++r)
        if (lp.b[r] != 0.0) out << " RHS " << rname(r) << " " << lp.b[r] << "\n";
    out << "ENDATA\n";
    out.precision(old_prec);
}

} // namespace ulamsteer::lp
