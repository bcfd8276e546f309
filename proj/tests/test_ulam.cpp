#include <doctest.h>

#include "ulamsteer/ulam.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ulamsteer;

TEST_CASE("identity dynamics give the identity tensor") {
    for (std::size_t q : {1UL, 3UL, 8UL}) {
        Partition p({0, 0}, {1, 1}, {5, 3});
        TranslationSystem id(p.box(), true);
        const auto U = discretize_controls({0, 0}, {0, 0}, {1, 1});
        const auto T = build_tensor(id, p, U, q);
        const Eigen::MatrixXd P(T.P[0]);
        CHECK(P == Eigen::MatrixXd::Identity(15, 15));
    }
}

TEST_CASE("translation by one cell width is a shift") {
    Partition p({0}, {1}, {4});
    TranslationSystem tr(p.box(), true);
    const auto U = discretize_controls({0.25}, {0.25}, {1});
    const auto T = build_tensor(tr, p, U, 64);
    // Independent construction: push every fine point and count.
    Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(4, 4);
    const int q = 64;
    for (int i = 0; i < 4; ++i)
        for (int s = 0; s < q; ++s) {
            const double x = 0.25 * i + 0.25 * (s + 0.5) / q;
            double y = x + 0.25;
            if (y > 1.0) y = x;
            const int j = std::min(3, static_cast<int>(std::floor(y * 4)));
            brute(i, j) += 1.0 / q;
        }
    Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(4, 4);
    shift(0, 1) = shift(1, 2) = shift(2, 3) = shift(3, 3) = 1.0;
    CHECK(brute == shift);
    CHECK(Eigen::MatrixXd(T.P[0]) == shift);
}

TEST_CASE("double integrator rows are unit vectors when drift stays in-cell") {
    // One cell across x: the drift 0.15 * y never leaves its column, and
    // u = 0 keeps y fixed, so every row is a unit vector on the diagonal.
    Partition p({0, 0}, {1, 1}, {1, 4});
    DoubleIntegrator di(p.box());
    const auto U = discretize_controls({0}, {0}, {1});
    const std::size_t q = 8;
    const auto T = build_tensor(di, p, U, q);
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> row(p.size(), 0.0);
        for (const auto& x : p.quadrature_points(i, q)) row[p.locate(di.step(x, U[0]))] += 1.0 / 64;
        CHECK(row[i] == 1.0);
        for (std::size_t j = 0; j < p.size(); ++j) CHECK(T.prob(0, i, j) == row[j]);
    }
}

TEST_CASE("rows are stochastic and entries in [0,1]") {
    Partition p({0, 0}, {1, 1}, {16, 16});
    DoubleIntegrator di(p.box());
    const auto U = discretize_controls({-0.25}, {0.25}, {5});
    TensorDiagnostics diag;
    const auto T = build_tensor(di, p, U, 4, 2, &diag);
    for (std::size_t k = 0; k < T.n_controls; ++k)
        for (std::size_t i = 0; i < T.n_cells; ++i) {
            CHECK(std::abs(T.row_sum(k, i) - 1.0) <= 1e-12);
            for (SparseRowMatrix::InnerIterator it(T.P[k], static_cast<Eigen::Index>(i)); it; ++it) {
                CHECK(it.value() > 0.0);
                CHECK(it.value() <= 1.0);
            }
        }
    CHECK(diag.boundary_fraction >= 0.0);
    CHECK(diag.boundary_fraction <= 1.0);
    CHECK(diag.row_boundary_fraction.size() == T.n_controls * T.n_cells);
}

TEST_CASE("quadrature refinement is bounded by the boundary fraction") {
    Partition p({0, 0}, {1, 1}, {8, 8});
    DoubleIntegrator di(p.box());
    const auto U = discretize_controls({-0.25}, {0.25}, {3});
    TensorDiagnostics d4;
    const auto T4 = build_tensor(di, p, U, 4, 1, &d4);
    const auto T8 = build_tensor(di, p, U, 8);
    for (std::size_t k = 0; k < U.size(); ++k)
        for (std::size_t i = 0; i < p.size(); ++i) {
            double diff = 0.0;
            for (std::size_t j = 0; j < p.size(); ++j)
                diff = std::max(diff, std::abs(T4.prob(k, i, j) - T8.prob(k, i, j)));
            CHECK(diff <= d4.row_boundary_fraction[k * p.size() + i] + 1e-15);
        }
}

TEST_CASE("threads do not change the tensor") {
    Partition p({0, 0}, {2, 1}, {16, 8});
    GyreUnicycle g(p.box(), DoubleGyreParams{});
    const auto U = discretize_controls({-1, 0}, {1, 6.283185307179586}, {2, 4});
    CHECK(build_tensor(g, p, U, 3, 1) == build_tensor(g, p, U, 3, 4));
}

TEST_CASE("Dirac pushforward is the row of P") {
    Partition p({0, 0}, {1, 1}, {8, 8});
    DoubleIntegrator di(p.box());
    const auto U = discretize_controls({-0.25}, {0.25}, {3});
    const auto T = build_tensor(di, p, U, 4);
    for (std::size_t i : {0UL, 9UL, 35UL, 63UL})
        for (std::size_t k = 0; k < 3; ++k) {
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(64);
            mu[static_cast<Eigen::Index>(i)] = 1.0;
            const Eigen::VectorXd pushed = T.P[k].transpose() * mu;
            for (std::size_t j = 0; j < 64; ++j) CHECK(pushed[static_cast<Eigen::Index>(j)] == T.prob(k, i, j));
        }
}

TEST_CASE("cost tables") {
    Partition unit({0, 0}, {1, 1}, {1, 1});
    const auto zero_u = discretize_controls({0}, {0}, {1});
    // Midpoint rule on x^2 over [0,1] with q points undershoots by 1/(12 q^2)
    // per axis, so the error against 2/3 is exactly 1/(6 q^2).
    for (std::size_t q : {1UL, 4UL, 8UL, 10UL, 32UL}) {
        const auto c = build_cost_table(unit, zero_u, stage_cost_by_name("quadratic"), q);
        const double qq = static_cast<double>(q * q);
        CHECK(c(0, 0) == doctest::Approx(2.0 / 3.0 - 1.0 / (6.0 * qq)).epsilon(1e-13));
        if (q >= 10) CHECK(std::abs(c(0, 0) - 2.0 / 3.0) <= 2e-3);
    }

    Partition p({0, 0}, {2, 1}, {4, 2});
    const auto U = discretize_controls({-1, 0}, {1, 2}, {3, 2});
    const auto z = build_cost_table(p, U, stage_cost_by_name("zero"), 3);
    CHECK(z.values.isZero(0.0));

    for (std::size_t q : {1UL, 2UL, 5UL}) {
        const auto cu = build_cost_table(p, U, stage_cost_by_name("control"), q);
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t k = 0; k < U.size(); ++k) {
                const double u2 = U[k][0] * U[k][0] + U[k][1] * U[k][1];
                CHECK(cu(i, k) == doctest::Approx(p.cell_volume() * u2).epsilon(1e-15));
            }
        const auto pv = build_cost_table(p, U, stage_cost_by_name("control"), q, true);
        CHECK(pv(3, 5) == doctest::Approx(U[5][0] * U[5][0] + U[5][1] * U[5][1]));
    }

    const auto quad = build_cost_table(p, U, stage_cost_by_name("quadratic"), 4);
    CHECK(quad.values.allFinite());
    CHECK(quad.values.minCoeff() >= 0.0);
    CHECK_THROWS(stage_cost_by_name("cubic"));
}

TEST_CASE("tensor binary round trip and determinism") {
    Partition p({0, 0}, {1, 1}, {8, 8});
    DoubleIntegrator di(p.box());
    const auto U = discretize_controls({-0.25}, {0.25}, {3});
    const auto T = build_tensor(di, p, U, 4);
    CHECK(T.partition_hash == p.hash());
    CHECK(T.controls_hash == U.hash());
    std::stringstream s1, s2;
    write_tensor_binary(T, s1);
    write_tensor_binary(build_tensor(di, p, U, 4), s2);
    CHECK(s1.str() == s2.str());
    const auto back = read_tensor_binary(s1);
    CHECK(back == T);

    std::stringstream bad("NOTATENSOR");
    CHECK_THROWS(read_tensor_binary(bad));
}
