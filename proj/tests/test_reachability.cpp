#include <doctest.h>

#include "instances.hpp"
#include "oracles.hpp"
#include "ulamsteer/reachability.hpp"
#include "ulamsteer/transport.hpp"

#include <random>

using namespace ulamsteer;

namespace {

// Largest probability over all control words of length n of going from i to j.
double best_path(const TransitionTensor& T, std::size_t i, std::size_t j, std::size_t n) {
    if (n == 0) return i == j ? 1.0 : 0.0;
    double best = 0.0;
    for (std::size_t k = 0; k < T.n_controls; ++k)
        for (std::size_t m = 0; m < T.n_cells; ++m) {
            const double p = T.prob(k, i, m);
            if (p > 0.0) best = std::max(best, p * best_path(T, m, j, n - 1));
        }
    return best;
}

TransitionTensor random_tensor(std::size_t nx, std::size_t nu, std::mt19937_64& rng) {
    std::vector<Eigen::MatrixXd> P;
    for (std::size_t k = 0; k < nu; ++k) P.push_back(oracle::random_stochastic(nx, 2, rng));
    return oracle::tensor_from_dense(P);
}

} // namespace

TEST_CASE("splitting example reaches both outer cells") {
    instances::Splitting s;
    const auto R = reachable_sets(s.tensor, 1);
    for (std::size_t j = 0; j < 3; ++j) CHECK(R.reachable(1, 1, j));
    CHECK(check_sufficient_condition(R, s.mu0, s.muf, 1).satisfied);
}

TEST_CASE("reach_0 is the identity and identity chains never move") {
    instances::Identity id(5);
    const auto R = reachable_sets(id.tensor, 4);
    for (std::size_t n = 0; n <= 4; ++n)
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) CHECK(R.reachable(n, i, j) == (i == j));

    const Measure half({0.5, 0.0, 0.0, 0.5, 0.0});
    const auto v = check_sufficient_condition(R, half, half, 3);
    CHECK_FALSE(v.satisfied);
    CHECK(v.violations.size() == 2);

    const auto d = Measure::dirac(5, 2);
    for (std::size_t n = 1; n <= 4; ++n) CHECK(check_sufficient_condition(R, d, d, n).satisfied);
}

TEST_CASE("reachability recursion matches brute force") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t nx = 3 + trial % 5, nu = 1 + trial % 3, N = 1 + trial % 4;
        const auto T = random_tensor(nx, nu, rng);
        const auto R = reachable_sets(T, N, false, 1 + trial % 2);
        const auto C = reachable_sets(T, N, true);
        for (std::size_t n = 0; n <= N; ++n)
            for (std::size_t i = 0; i < nx; ++i)
                for (std::size_t j = 0; j < nx; ++j) {
                    CHECK(R.reachable(n, i, j) == (best_path(T, i, j, n) > 0.0));
                    bool any = false;
                    for (std::size_t m = 0; m <= n; ++m) any = any || R.reachable(m, i, j);
                    CHECK(C.reachable(n, i, j) == any);
                }
    }
}

TEST_CASE("witnesses are valid positive-probability paths") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t nx = 4 + trial % 4, N = 1 + trial % 3;
        const auto T = random_tensor(nx, 2, rng);
        const auto R = reachable_sets(T, N);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < nx; ++j) {
                const auto w = extract_witness(T, i, j, N);
                REQUIRE(w.has_value() == R.reachable(N, i, j));
                if (!w) continue;
                REQUIRE(w->cells.size() == N + 1);
                REQUIRE(w->controls.size() == N);
                CHECK(w->cells.front() == i);
                CHECK(w->cells.back() == j);
                double p = 1.0;
                for (std::size_t n = 0; n < N; ++n) p *= T.prob(w->controls[n], w->cells[n], w->cells[n + 1]);
                CHECK(p > 0.0);
                CHECK(p == doctest::Approx(w->probability));
            }
    }
}

TEST_CASE("Violated never lies") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t nx = 3 + trial % 3, nu = 1 + trial % 2, N = 1 + trial % 3;
        const auto T = random_tensor(nx, nu, rng);
        const auto mu0 = oracle::random_measure(nx, rng);
        const auto muf = oracle::random_measure(nx, rng);
        const auto v = check_sufficient_condition(reachable_sets(T, N), mu0, muf, N);
        CHECK(v.satisfied == v.violations.empty());
        for (const auto& [i, j] : v.violations) {
            CHECK(mu0[i] > 0.0);
            CHECK(muf[j] > 0.0);
            CHECK(best_path(T, i, j, N) == 0.0);
        }
    }
}

TEST_CASE("Satisfied implies LP feasibility on deterministic chains") {
    std::mt19937_64 rng(78);
    int satisfied = 0;
    for (int trial = 0; trial < 80; ++trial) {
        const std::size_t nx = 3 + trial % 3, nu = 2 + trial % 2, N = 1 + trial % 3;
        std::vector<Eigen::MatrixXd> P;
        for (std::size_t k = 0; k < nu; ++k) P.push_back(oracle::random_stochastic(nx, 1, rng));
        const auto T = oracle::tensor_from_dense(P);
        const auto mu0 = oracle::random_measure(nx, rng);
        const auto muf = oracle::random_measure(nx, rng);
        if (!check_sufficient_condition(reachable_sets(T, N), mu0, muf, N).satisfied) continue;
        ++satisfied;
        const auto c = oracle::cost_from_dense(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nu)));
        CHECK(solve(assemble(T, c, mu0, muf, N)).status == lp::Status::Optimal);
    }
    CHECK(satisfied >= 10);
}

TEST_CASE("on stochastic chains Satisfied does not imply feasibility") {
    // One control, cell 0 splits evenly: cell 1 is reachable from cell 0,
    // yet no law can put all of the mass there.
    Eigen::MatrixXd P(2, 2);
    P << 0.5, 0.5, 0, 1;
    const auto T = oracle::tensor_from_dense({P});
    const auto mu0 = Measure::dirac(2, 0), muf = Measure::dirac(2, 1);
    CHECK(check_sufficient_condition(reachable_sets(T, 1), mu0, muf, 1).satisfied);
    const auto pr = assemble(T, oracle::cost_from_dense(Eigen::MatrixXd::Ones(2, 1)), mu0, muf, 1);
    const auto out = solve(pr);
    CHECK(out.status == lp::Status::Infeasible);
    CHECK(out.certificate_verified);
    CHECK_FALSE(oracle::enumerate_vertices(pr.form).has_value());
}

TEST_CASE("solver and oracle agree on feasibility of random stochastic chains") {
    std::mt19937_64 rng(79);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t nx = 3 + trial % 2, N = 1 + trial % 2;
        const auto T = random_tensor(nx, 2, rng);
        const auto mu0 = oracle::random_measure(nx, rng);
        const auto muf = oracle::random_measure(nx, rng);
        const auto pr = assemble(T, oracle::cost_from_dense(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(nx), 2)), mu0, muf, N);
        const auto out = solve(pr);
        CHECK((out.status == lp::Status::Optimal) == oracle::enumerate_vertices(pr.form).has_value());
    }
}

TEST_CASE("removing a control never enlarges reachable sets") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Eigen::MatrixXd> P;
        for (int k = 0; k < 3; ++k) P.push_back(oracle::random_stochastic(6, 2, rng));
        const auto full = reachable_sets(oracle::tensor_from_dense(P), 3);
        P.pop_back();
        const auto less = reachable_sets(oracle::tensor_from_dense(P), 3);
        for (std::size_t n = 0; n <= 3; ++n)
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = 0; j < 6; ++j)
                    if (less.reachable(n, i, j)) CHECK(full.reachable(n, i, j));
    }
}
