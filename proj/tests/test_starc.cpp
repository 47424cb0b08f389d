#include "starclab/errors.hpp"
#include "starclab/oracles.hpp"
#include "starclab/starc.hpp"
#include "starclab/transforms.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace starclab;

TEST_CASE("canonicalization agrees with a dense least-squares projection") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t S = 1 + seed % 5, A = 1 + seed % 3;
        const TabularMdp mdp = random_mdp(seed, S, A, 0.7);
        const RewardFunction r = random_reward(seed + 50, S, A);
        const CanonicalReward c = canonicalize(mdp, r);
        const Eigen::VectorXd dense = testing::dense_canonical(mdp, r.values());
        CHECK((c.canonical.values() - dense).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(c.norm == doctest::Approx(dense.norm()).epsilon(1e-9));
    }
}

TEST_CASE("canonical dimension") {
    for (std::size_t S = 1; S <= 4; ++S)
        for (std::size_t A = 1; A <= 3; ++A) {
            const StarcMetric metric(random_mdp(S * 10 + A, S, A, 1.0));
            CHECK(metric.projector().canonical_dimension() == S * (A - 1));
        }
}

TEST_CASE("canonicalize") {
    const TabularMdp mdp = random_mdp(4, 4, 3, 1.0);
    const RewardFunction r = random_reward(5, 4, 3);

    CHECK(canonicalize(mdp, RewardFunction::constant(4, 3, 3.0)).canonical.max_abs() < 1e-10);

    const RewardFunction moved = apply_redistribution_noise(
        apply_potential_shaping(r, PotentialFunction{Eigen::VectorXd::LinSpaced(4, 2.0, -3.0)}, mdp.discount()), mdp, 9,
        1.5);
    CHECK((canonicalize(mdp, moved).canonical - canonicalize(mdp, r).canonical).max_abs() < 1e-8);

    const RewardFunction once = canonicalize(mdp, r).canonical;
    CHECK((canonicalize(mdp, once).canonical - once).max_abs() < 1e-8);
}

TEST_CASE("standardize") {
    const TabularMdp mdp = random_mdp(6, 3, 3, 1.0);
    const RewardFunction r = random_reward(7, 3, 3);

    const StandardizedReward trivial = standardize(mdp, RewardFunction::constant(3, 3, -4.0));
    CHECK(trivial.is_zero);
    CHECK(trivial.unit.max_abs() == 0.0);

    CHECK(standardize(mdp, r).unit.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((standardize(mdp, 7.0 * r).unit - standardize(mdp, r).unit).max_abs() < 1e-12);
}

TEST_CASE("landmark distances") {
    const TabularMdp mdp = random_mdp(8, 4, 2, 1.0);
    const RewardFunction r = random_reward(9, 4, 2);
    CHECK(starc_distance(mdp, r, 3.0 * r).distance < 1e-8);
    CHECK(starc_distance(mdp, r, -r).distance == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(starc_distance(mdp, r, RewardFunction::constant(4, 2, 1.0)).distance == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(starc_distance(mdp, RewardFunction::zeros(4, 2), RewardFunction::constant(4, 2, 1.0)).distance == 0.0);
}

TEST_CASE("metric axioms on seeded triples") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t S = 1 + seed % 6, A = 1 + seed % 3;
        const StarcMetric metric(random_mdp(seed, S, A, 1.0));
        const RewardFunction a = random_reward(3 * seed + 1, S, A);
        const RewardFunction b = random_reward(3 * seed + 2, S, A);
        const RewardFunction c = random_reward(3 * seed + 3, S, A);
        const double ab = metric.distance(a, b).distance;
        CHECK(ab == metric.distance(b, a).distance);
        CHECK(metric.distance(a, a).distance < 1e-12);
        CHECK(ab <= metric.distance(a, c).distance + metric.distance(c, b).distance + 1e-9);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("zero distance agrees with the ordering oracle") {
    std::size_t zeros = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const std::size_t S = 2 + seed % 3, A = 2;
        const TabularMdp mdp = random_mdp(seed, S, A, 1.0);
        const RewardFunction r = random_reward(seed + 1, S, A);
        RewardFunction other = random_reward(seed + 2, S, A);
        if (seed % 2 == 0) {
            other = apply_redistribution_noise(
                apply_potential_shaping(2.0 * r, PotentialFunction::indicator(S, seed % S, 1.0), mdp.discount()), mdp,
                seed, 0.5);
        }
        const bool close = starc_distance(mdp, r, other).distance < 1e-8;
        zeros += close ? 1 : 0;
        CHECK(close == same_order_oracle(mdp, r, other));
    }
    CHECK(zeros == 30);
}

TEST_CASE("regret gap") {
    const TabularMdp mdp = random_mdp(12, 3, 2, 1.0);
    const RewardFunction r = random_reward(13, 3, 2);
    CHECK(regret_gap(mdp, r, r).normalized_regret == doctest::Approx(0.0));
    CHECK(regret_gap(mdp, RewardFunction::constant(3, 2, 1.0), r).normalized_regret == 0.0);

    const RegretGap flipped = regret_gap(mdp, r, -r);
    CHECK(flipped.normalized_regret == doctest::Approx(1.0).epsilon(1e-8));
    REQUIRE(flipped.witness);
    const Eigen::VectorXd j = deterministic_returns(mdp, r);
    CHECK(policy_return(mdp, r, flipped.witness->first) == doctest::Approx(j.maxCoeff()));
    CHECK(policy_return(mdp, r, flipped.witness->second) == doctest::Approx(j.minCoeff()));
}
