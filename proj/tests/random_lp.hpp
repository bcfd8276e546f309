#pragma once

// Random small transport instances and the LP written out by hand in the nu
// variables, used by the oracle-equivalence tests.

#include "oracles.hpp"
#include "ulamsteer/grid.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace random_lp {

// The transport LP written directly in the nu variables, independent of
// assemble(): marginals of nu_0 are mu0, marginals of nu_n are the image of
// nu_{n-1}, and the image of nu_{N-1} is muf.
struct DirectLP {
    Eigen::MatrixXd A;
    Eigen::VectorXd b, c;
};

inline DirectLP direct_lp(const std::vector<Eigen::MatrixXd>& P, const Eigen::MatrixXd& cost,
                   const std::vector<double>& mu0, const std::vector<double>& muf, std::size_t N) {
    const auto nx = static_cast<Eigen::Index>(mu0.size());
    const auto nu = static_cast<Eigen::Index>(P.size());
    const auto n = static_cast<Eigen::Index>(N);
    auto col = [&](Eigen::Index step, Eigen::Index k, Eigen::Index i) { return (step * nu + k) * nx + i; };
    DirectLP d;
    d.A = Eigen::MatrixXd::Zero((n + 1) * nx, n * nu * nx);
    d.b = Eigen::VectorXd::Zero((n + 1) * nx);
    d.c = Eigen::VectorXd::Zero(n * nu * nx);
    for (Eigen::Index step = 0; step < n; ++step)
        for (Eigen::Index k = 0; k < nu; ++k)
            for (Eigen::Index i = 0; i < nx; ++i) {
                d.c[col(step, k, i)] = cost(i, k);
                d.A(step * nx + i, col(step, k, i)) += 1.0;
                for (Eigen::Index j = 0; j < nx; ++j) d.A((step + 1) * nx + j, col(step, k, i)) -= P[static_cast<std::size_t>(k)](i, j);
            }
    for (Eigen::Index i = 0; i < nx; ++i) {
        d.b[i] = mu0[static_cast<std::size_t>(i)];
        // The last block reads -image = -muf.
        d.b[n * nx + i] = -muf[static_cast<std::size_t>(i)];
    }
    return d;
}

struct Instance {
    std::vector<Eigen::MatrixXd> P;
    Eigen::MatrixXd cost;
    ulamsteer::Measure mu0, muf;
    std::size_t N;
};

inline Instance random_instance(std::size_t nx, std::size_t nu, std::size_t N, bool reachable_target,
                         std::mt19937_64& rng) {
    Instance in;
    for (std::size_t k = 0; k < nu; ++k) in.P.push_back(oracle::random_stochastic(nx, 3, rng));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    in.cost = Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nu),
                                           [&] { return U(rng); });
    in.mu0 = oracle::random_measure(nx, rng);
    in.N = N;
    if (reachable_target) {
        // Push mu0 through a random deterministic policy; dyadic stays exact.
        Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(in.mu0.weights.data(), static_cast<Eigen::Index>(nx));
        std::uniform_int_distribution<std::size_t> pick(0, nu - 1);
        for (std::size_t n = 0; n < N; ++n) {
            Eigen::VectorXd next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nx));
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(nx); ++i)
                next += m[i] * in.P[pick(rng)].row(i).transpose();
            m = next;
        }
        in.muf = ulamsteer::Measure(std::vector<double>(m.data(), m.data() + m.size()));
    } else {
        in.muf = oracle::random_measure(nx, rng);
    }
    return in;
}

} // namespace random_lp
