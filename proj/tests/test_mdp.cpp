#include "starclab/errors.hpp"
#include "starclab/mdp.hpp"
#include "starclab/oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace starclab;

TEST_CASE("constructor rejects malformed environments") {
    Eigen::MatrixXd bad(1, 1);
    bad << 0.9;
    CHECK_THROWS_AS(TabularMdp(1, 1, bad, Eigen::VectorXd::Ones(1), 0.9), ValidationError);
    CHECK_THROWS_AS(TabularMdp(1, 1, Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), 1.0), ValidationError);

    // State 1 is never reached from state 0.
    Eigen::MatrixXd split(2, 2);
    split << 1, 0, 0, 1;
    Eigen::VectorXd mu(2);
    mu << 1, 0;
    CHECK_THROWS_AS(TabularMdp(2, 1, split, mu, 0.9), ValidationError);
}

TEST_CASE("policy evaluation") {
    SUBCASE("geometric series") {
        const TabularMdp mdp = testing::single_state(1, 0.5);
        const auto v = policy_evaluation(mdp, testing::single_state_reward({1.0}), Policy::uniform(1, 1));
        CHECK(v.values(0) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("zero reward") {
        const TabularMdp mdp = random_mdp(3, 4, 3, 1.0);
        const auto v = policy_evaluation(mdp, RewardFunction::zeros(4, 3), random_policy(4, 4, 3));
        CHECK(v.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("matches fixed-point iteration and the Bellman residual") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const TabularMdp mdp = random_mdp(seed, 5, 3, 1.0);
            const RewardFunction r = random_reward(seed + 100, 5, 3);
            const Policy pi = random_policy(seed + 200, 5, 3);
            const auto v = policy_evaluation(mdp, r, pi);
            CHECK(v.residual < 1e-10);
            CHECK(testing::linf(v.values, testing::iterate_policy_values(mdp, r, pi)) < 1e-9);
        }
    }
    SUBCASE("matches Monte Carlo within three standard errors") {
        const TabularMdp mdp = random_mdp(11, 5, 3, 1.0);
        const RewardFunction r = random_reward(12, 5, 3);
        const Policy pi = random_policy(13, 5, 3);
        const std::size_t horizon = horizon_for_bias(mdp.discount(), r.max_abs(), 1e-8);
        CHECK(std::pow(mdp.discount(), static_cast<double>(horizon)) < 1e-8);
        const auto mc = monte_carlo_return(mdp, r, pi, horizon, 100000, 14);
        CHECK(std::abs(mc.estimate - policy_return(mdp, r, pi)) < 3.0 * mc.standard_error);
    }
}

TEST_CASE("optimal values") {
    SUBCASE("zero reward") {
        const auto opt = optimal_values(random_mdp(1, 3, 2, 1.0), RewardFunction::zeros(3, 2));
        CHECK(opt.v.values.cwiseAbs().maxCoeff() == 0.0);
        CHECK(opt.q.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("analytic fixed point V = 1 + 0.9 V") {
        const auto opt = optimal_values(testing::single_state(2, 0.9), testing::single_state_reward({1.0, 0.0}));
        CHECK(opt.v.values(0) == doctest::Approx(10.0).epsilon(1e-9));
        CHECK(opt.q.values(0, 0) == doctest::Approx(10.0).epsilon(1e-9));
        CHECK(opt.q.values(0, 1) == doctest::Approx(9.0).epsilon(1e-9));
    }
    SUBCASE("greedy policy admits no improving single-state swap") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const TabularMdp mdp = random_mdp(seed, 4, 3, 0.5);
            const RewardFunction r = random_reward(seed + 7, 4, 3);
            const auto opt = optimal_values(mdp, r);
            std::vector<std::size_t> greedy(4);
            for (Eigen::Index s = 0; s < 4; ++s) opt.q.values.row(s).maxCoeff(&greedy[static_cast<std::size_t>(s)]);
            const Eigen::VectorXd base = policy_evaluation(mdp, r, Policy::deterministic(greedy, 3)).values;
            CHECK(testing::linf(base, opt.v.values) < 1e-8);
            for (std::size_t s = 0; s < 4; ++s) {
                for (std::size_t a = 0; a < 3; ++a) {
                    auto swapped = greedy;
                    swapped[s] = a;
                    const Eigen::VectorXd v = policy_evaluation(mdp, r, Policy::deterministic(swapped, 3)).values;
                    CHECK((v - base).maxCoeff() < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("policy return and occupancy") {
    SUBCASE("single triple") {
        const TabularMdp mdp = testing::single_state(1, 0.5);
        const auto occ = occupancy_measure(mdp, Policy::uniform(1, 1));
        CHECK(occ.triples(0) == doctest::Approx(2.0));
        CHECK(policy_return(mdp, testing::single_state_reward({1.0}), Policy::uniform(1, 1)) == doctest::Approx(2.0));
    }
    SUBCASE("zero reward") {
        CHECK(policy_return(random_mdp(2, 3, 2, 1.0), RewardFunction::zeros(3, 2), Policy::uniform(3, 2)) == 0.0);
    }
    SUBCASE("mass and linear functional on 100 instances") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const std::size_t S = 2 + seed % 5, A = 1 + seed % 3;
            const TabularMdp mdp = random_mdp(seed, S, A, 1.0);
            const RewardFunction r = random_reward(seed + 1000, S, A);
            const Policy pi = random_policy(seed + 2000, S, A);
            const auto occ = occupancy_measure(mdp, pi);
            CHECK(std::abs(occ.total_mass() - 1.0 / (1.0 - mdp.discount())) < 1e-6);
            CHECK(occ.triples.minCoeff() >= 0.0);
            const double direct = mdp.initial_distribution().dot(testing::iterate_policy_values(mdp, r, pi, 600));
            CHECK(std::abs(occ.dot(r) - policy_return(mdp, r, pi)) < 1e-8);
            CHECK(std::abs(direct - policy_return(mdp, r, pi)) < 1e-8);
        }
    }
}

TEST_CASE("generators") {
    CHECK(random_mdp(5, 4, 3, 1.0) == random_mdp(5, 4, 3, 1.0));
    CHECK(random_reward(5, 4, 3) == random_reward(5, 4, 3));
    CHECK(random_policy(5, 4, 3) == random_policy(5, 4, 3));
    CHECK_FALSE(random_reward(5, 4, 3) == random_reward(6, 4, 3));

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const TabularMdp mdp = random_mdp(seed, 10, 2, 1e4);
        CHECK(mdp.transition().maxCoeff() < 2.0 / 10.0);
    }
}
