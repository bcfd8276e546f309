#include <doctest.h>

#include "instances.hpp"
#include "oracles.hpp"
#include "ulamsteer/error.hpp"
#include "ulamsteer/feedback.hpp"
#include "ulamsteer/transport.hpp"

#include <random>

using namespace ulamsteer;

namespace {

TransportSolution solved(const TransitionTensor& T, const CostTable& c, const Measure& mu0, const Measure& muf,
                         std::size_t N) {
    auto out = solve(assemble(T, c, mu0, muf, N));
    REQUIRE(out.status == lp::Status::Optimal);
    return *out.solution;
}

// Eight cells on [0,1] and shifts of exactly one cell width: the chain is
// an exact copy of the dynamics, so rollouts should match propagate up to
// sampling noise.
struct ExactShift {
    Partition partition{{0}, {1}, {8}};
    ControlGrid controls = discretize_controls({-0.125}, {0.125}, {3});
    TranslationSystem system{partition.box(), true};
    TransitionTensor tensor = build_tensor(system, partition, controls, 16);
    CostTable costs = build_cost_table(partition, controls, stage_cost_by_name("quadratic"), 4);
};

} // namespace

TEST_CASE("splitting law") {
    instances::Splitting s;
    const auto sol = solved(s.tensor, s.costs, s.mu0, s.muf, 1);
    const auto law = extract_feedback(sol);
    CHECK(std::abs(law.lambda[0](0, 1) - 0.5) <= 1e-9);
    CHECK(std::abs(law.lambda[0](1, 1)) <= 1e-9);
    CHECK(std::abs(law.lambda[0](2, 1) - 0.5) <= 1e-9);
    CHECK(law.defined[0][1]);
    CHECK_FALSE(law.defined[0][0]);
    CHECK_FALSE(law.defined[0][2]);
    CHECK(law.lambda[0].col(0).isZero(0.0));
    CHECK(law.lambda[0].col(2).isZero(0.0));
}

TEST_CASE("concentrated nu gives a deterministic law") {
    Eigen::MatrixXd stay = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd right(3, 3);
    right << 0, 1, 0, 0, 0, 1, 0, 0, 1;
    Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(3, 2);
    const auto T = oracle::tensor_from_dense({stay, right});
    const auto sol = solved(T, oracle::cost_from_dense(cost), Measure::dirac(3, 0), Measure::dirac(3, 2), 2);
    const auto law = extract_feedback(sol);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t i = 0; i < 3; ++i) {
            if (!law.defined[n][i]) continue;
            for (Eigen::Index k = 0; k < 2; ++k) {
                const double v = law.lambda[n](k, static_cast<Eigen::Index>(i));
                CHECK((std::abs(v) <= 1e-12 || std::abs(v - 1) <= 1e-12));
            }
        }
    CHECK(law.lambda[0](1, 0) == doctest::Approx(1.0));
    CHECK(law.lambda[1](1, 1) == doctest::Approx(1.0));
}

TEST_CASE("identity dynamics keep the measure under any law") {
    instances::Identity id(6);
    FeedbackLaw law;
    law.n_cells = 6;
    law.n_controls = 1;
    law.lambda.assign(4, Eigen::MatrixXd::Ones(1, 6));
    law.defined.assign(4, std::vector<char>(6, 1));
    const std::vector<double> mu0{0.1, 0.2, 0.0, 0.3, 0.25, 0.15};
    const auto tr = propagate(id.tensor, law, mu0, 4, id.costs);
    for (const auto& m : tr.measures) CHECK(m == mu0);
}

TEST_CASE("round trip reproduces the LP trajectory and cost") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t nx = 6, nu = 3, N = 1 + trial % 5;
        std::vector<Eigen::MatrixXd> P;
        for (std::size_t k = 0; k < nu; ++k) P.push_back(oracle::random_stochastic(nx, 3, rng));
        const auto T = oracle::tensor_from_dense(P);
        std::uniform_real_distribution<double> U(0, 1);
        const auto costs = oracle::cost_from_dense(Eigen::MatrixXd::NullaryExpr(6, 3, [&] { return U(rng); }));
        const auto mu0 = oracle::random_measure(nx, rng);
        auto out = solve(assemble(T, costs, mu0, Measure::uniform(nx), N));
        if (out.status != lp::Status::Optimal) continue;
        const auto& sol = *out.solution;
        const auto law = extract_feedback(sol);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t i = 0; i < nx; ++i) {
                const double s = law.lambda[n].col(static_cast<Eigen::Index>(i)).sum();
                CHECK(law.lambda[n].col(static_cast<Eigen::Index>(i)).minCoeff() >= 0.0);
                CHECK(law.lambda[n].col(static_cast<Eigen::Index>(i)).maxCoeff() <= 1.0);
                if (law.defined[n][i]) CHECK(std::abs(s - 1.0) <= 1e-9);
                else CHECK(s == 0.0);
            }
        const auto tr = propagate(T, law, mu0.weights, N, costs);
        for (std::size_t n = 0; n <= N; ++n) CHECK(l1_distance(tr.measures[n], sol.mu[n]) <= 1e-9);
        CHECK(std::abs(tr.total_cost - sol.objective) <= 1e-8);
        CHECK(tr.mass_drift <= 1e-12);
    }
}

TEST_CASE("zero cost gives zero total") {
    instances::Splitting s;
    CostTable zero{Eigen::MatrixXd::Zero(3, 3)};
    const auto sol = solved(s.tensor, zero, s.mu0, s.muf, 2);
    const auto tr = propagate(s.tensor, extract_feedback(sol), s.mu0.weights, 2, zero);
    CHECK(tr.total_cost == 0.0);
}

TEST_CASE("mass on a masked cell is an error") {
    instances::Splitting s;
    FeedbackLaw law;
    law.n_cells = 3;
    law.n_controls = 3;
    law.lambda.assign(1, Eigen::MatrixXd::Zero(3, 3));
    law.defined.assign(1, std::vector<char>(3, 0));
    law.lambda[0](1, 0) = 1.0;
    law.defined[0][0] = 1;
    CHECK_THROWS_AS(propagate(s.tensor, law, s.mu0.weights, 1, s.costs), UndefinedLaw);

    // Stray mass at or below eps_mass is dropped and accounted for.
    const std::vector<double> tiny{1.0 - 1e-13, 1e-13, 0.0};
    const auto tr = propagate(s.tensor, law, tiny, 1, s.costs);
    CHECK(tr.dropped_mass == doctest::Approx(1e-13));
}

TEST_CASE("inverse-CDF control sampling") {
    Eigen::MatrixXd lam(4, 1);
    lam << 0.25, 0.0, 0.5, 0.25;
    CHECK(sample_control(lam, 0, 0.0) == 0);
    CHECK(sample_control(lam, 0, 0.2499) == 0);
    CHECK(sample_control(lam, 0, 0.25) == 2);
    CHECK(sample_control(lam, 0, 0.7499) == 2);
    CHECK(sample_control(lam, 0, 0.75) == 3);
    CHECK(sample_control(lam, 0, 0.999999) == 3);
}

TEST_CASE("agent streams") {
    AgentRng a(1, 2), b(1, 2), c(1, 3), d(2, 2);
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());
    AgentRng e(5, 5);
    for (int s = 0; s < 1000; ++s) {
        const double u = e.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("rollout on an exact chain matches propagate and the chain oracle") {
    ExactShift e;
    const auto mu0 = Measure::dirac(8, 3);
    const Measure muf({0.0, 0.25, 0.0, 0.0, 0.25, 0.0, 0.5, 0.0});
    const auto sol = solved(e.tensor, e.costs, mu0, muf, 4);
    const auto law = extract_feedback(sol);
    const auto tr = propagate(e.tensor, law, mu0.weights, 4, e.costs);

    RolloutOptions opt;
    opt.agents = 40000;
    opt.seed = 12;
    opt.threads = 2;
    const auto r = rollout(e.system, e.partition, e.controls, law, measure_sampler(e.partition, mu0.weights), opt);
    CHECK(total_variation(r.final_measure, tr.measures.back()) <= 0.02);
    CHECK(r.flagged_agents == 0);

    const auto chain = oracle::chain_rollout(e.tensor, law, mu0.weights, 40000, 12);
    CHECK(total_variation(chain, tr.measures.back()) <= 0.02);
    CHECK(total_variation(chain, r.final_measure) <= 0.03);
}

TEST_CASE("rollout determinism and thread independence") {
    ExactShift e;
    const auto mu0 = Measure::uniform(8);
    const auto sol = solved(e.tensor, e.costs, mu0, Measure::uniform(8), 3);
    const auto law = extract_feedback(sol);
    RolloutOptions opt;
    opt.agents = 5000;
    opt.seed = 3;
    opt.keep_paths = 10;
    const auto sampler = measure_sampler(e.partition, mu0.weights);
    const auto a = rollout(e.system, e.partition, e.controls, law, sampler, opt);
    opt.threads = 3;
    const auto b = rollout(e.system, e.partition, e.controls, law, sampler, opt);
    CHECK(a.counts == b.counts);
    CHECK(a.paths == b.paths);
    REQUIRE(a.paths.size() == 10);
    CHECK(a.paths[0].size() == 4);
}

TEST_CASE("identity dynamics keep every agent in its initial cell") {
    instances::Identity id(5);
    FeedbackLaw law;
    law.n_cells = 5;
    law.n_controls = 1;
    law.lambda.assign(3, Eigen::MatrixXd::Ones(1, 5));
    law.defined.assign(3, std::vector<char>(5, 1));
    RolloutOptions opt;
    opt.agents = 2000;
    opt.keep_paths = 2000;
    opt.seed = 8;
    const auto r = rollout(id.system, id.partition, id.controls, law,
                           measure_sampler(id.partition, Measure::uniform(5).weights), opt);
    std::vector<std::size_t> initial(5, 0);
    for (const auto& p : r.paths) ++initial[id.partition.locate(p.front())];
    CHECK(initial == r.counts);
}

TEST_CASE("deterministic law and dynamics give seed-independent paths") {
    Partition p({0, 0}, {1, 1}, {8, 8});
    DoubleIntegrator di(p.box());
    const auto U = discretize_controls({-0.25}, {0.25}, {3});
    FeedbackLaw law;
    law.n_cells = 64;
    law.n_controls = 3;
    law.lambda.assign(5, Eigen::MatrixXd::Zero(3, 64));
    law.defined.assign(5, std::vector<char>(64, 1));
    for (std::size_t n = 0; n < 5; ++n)
        for (Eigen::Index i = 0; i < 64; ++i) law.lambda[n](static_cast<Eigen::Index>((n + static_cast<std::size_t>(i)) % 3), i) = 1.0;

    RolloutOptions opt;
    opt.agents = 1;
    opt.keep_paths = 1;
    const State x0{0.1, 0.2};
    opt.seed = 1;
    const auto a = rollout(di, p, U, law, point_sampler(x0), opt);
    opt.seed = 999;
    const auto b = rollout(di, p, U, law, point_sampler(x0), opt);
    CHECK(a.paths == b.paths);

    // The single path is the pointwise iteration of the map.
    State x = x0;
    for (std::size_t n = 0; n < 5; ++n) {
        const std::size_t cell = p.locate(x);
        x = di.step(x, U[(n + cell) % 3]);
        CHECK(a.paths[0][n + 1] == x);
    }
}

TEST_CASE("agents in masked cells are flagged") {
    ExactShift e;
    FeedbackLaw law;
    law.n_cells = 8;
    law.n_controls = 3;
    law.lambda.assign(2, Eigen::MatrixXd::Zero(3, 8));
    law.defined.assign(2, std::vector<char>(8, 0));
    RolloutOptions opt;
    opt.agents = 100;
    const auto r = rollout(e.system, e.partition, e.controls, law, measure_sampler(e.partition, Measure::uniform(8).weights), opt);
    CHECK(r.flagged_agents == 100);
    CHECK(r.flagged_events == 200);
}
