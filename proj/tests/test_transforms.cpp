#include "starclab/behavior.hpp"
#include "starclab/errors.hpp"
#include "starclab/instances.hpp"
#include "starclab/oracles.hpp"
#include "starclab/starc.hpp"
#include "starclab/transforms.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace starclab;

TEST_CASE("potential shaping") {
    const TabularMdp mdp = random_mdp(1, 4, 2, 1.0);
    const RewardFunction r = random_reward(2, 4, 2);

    SUBCASE("zero potential") {
        CHECK(apply_potential_shaping(r, PotentialFunction{Eigen::VectorXd::Zero(4)}, 0.9) == r);
    }
    SUBCASE("constant potential gives a constant reward") {
        const double k = 2.5;
        const RewardFunction out = apply_potential_shaping(
            RewardFunction::zeros(4, 2), PotentialFunction{Eigen::VectorXd::Constant(4, -k / (1.0 - 0.9))}, 0.9);
        CHECK((out.values().array() - k).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("returns shift by the initial potential") {
        const PotentialFunction phi{Eigen::VectorXd::LinSpaced(4, -1.0, 2.0)};
        const RewardFunction shaped = apply_potential_shaping(r, phi, mdp.discount());
        const double shift = mdp.initial_distribution().dot(phi.phi);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Policy pi = random_policy(seed, 4, 2);
            const double j = mdp.initial_distribution().dot(testing::iterate_policy_values(mdp, r, pi, 800));
            CHECK(policy_return(mdp, shaped, pi) == doctest::Approx(j - shift).epsilon(1e-9));
        }
    }
}

TEST_CASE("redistribution noise") {
    const TabularMdp mdp = random_mdp(3, 4, 3, 1.0);
    const RewardFunction r = random_reward(4, 4, 3);
    CHECK(apply_redistribution_noise(r, mdp, 1, 0.0) == r);

    const RewardFunction noisy = apply_redistribution_noise(r, mdp, 1, 2.0);
    CHECK((noisy - r).norm() == doctest::Approx(2.0));
    const Eigen::VectorXd means = testing::conditional_mean_operator(mdp) * (noisy - r).values();
    CHECK(means.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(linf_distance(boltzmann_policy(mdp, r, 1.0), boltzmann_policy(mdp, noisy, 1.0)) < 1e-6);
}

TEST_CASE("invariance basis") {
    SUBCASE("one state, one action") {
        const InvarianceBasis b = invariance_basis(testing::single_state(1, 0.8));
        REQUIRE(b.shaping_dirs.size() == 1);
        CHECK(b.shaping_dirs(0, 0) == doctest::Approx(0.8 - 1.0));
        CHECK(b.redistribution_dirs.cols() == 0);
    }
    SUBCASE("dimensions and defining constraints") {
        const TabularMdp mdp = random_mdp(5, 3, 2, 1.0);
        const InvarianceBasis b = invariance_basis(mdp);
        CHECK(b.redistribution_dirs.cols() == 12);
        const Eigen::MatrixXd m = testing::conditional_mean_operator(mdp);
        CHECK((m * b.redistribution_dirs).cwiseAbs().maxCoeff() < 1e-9);

        const Eigen::MatrixXd sh = testing::shaping_operator(3, 2, mdp.discount());
        for (Eigen::Index k = 0; k < b.shaping_dirs.cols(); ++k) {
            const Eigen::VectorXd v = b.shaping_dirs.col(k);
            const Eigen::VectorXd phi = sh.colPivHouseholderQr().solve(v);
            CHECK((sh * phi - v).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("differ_by") {
    const TabularMdp mdp = random_mdp(7, 3, 2, 1.0);
    const RewardFunction r = canonicalize(mdp, random_reward(8, 3, 2)).canonical;
    const RewardFunction shaped = apply_potential_shaping(r, PotentialFunction::indicator(3, 1, 2.0), mdp.discount());

    CHECK(differ_by(r, r, mdp) == RewardRelation::identical);
    CHECK(differ_by(r, shaped, mdp) == RewardRelation::shaping_and_redistribution);
    CHECK(differ_by(r, 2.0 * r, mdp) == RewardRelation::also_positive_scaling);
    CHECK(differ_by(r, -r, mdp) == RewardRelation::neither);
    CHECK_FALSE(same_order_oracle(mdp, r, -r));
}

TEST_CASE("discount-invisible reward") {
    const double g1 = 0.9, g2 = 0.95;
    const TabularMdp chain = three_state_chain(g1);

    SUBCASE("indicator on the middle state") {
        const double x = 1.7;
        const RewardFunction r = shaping_reward(3, 2, PotentialFunction::indicator(3, 1, x), g1);
        const auto at = [&](std::size_t s, std::size_t a, std::size_t t) { return r.values()((s * 2 + a) * 3 + t); };
        for (std::size_t a = 0; a < 2; ++a) {
            CHECK(at(1, a, 2) == doctest::Approx(-x));
            CHECK(at(2, a, 2) == 0.0);
        }
        CHECK(at(0, 0, 1) == doctest::Approx(g1 * x));
        CHECK(at(0, 1, 2) == 0.0);
    }
    SUBCASE("constructed reward") {
        const DiscountInvisibleReward inv = invisible_reward_discount(chain, g1, g2);
        const Policy uniform = Policy::uniform(3, 2);
        CHECK(linf_distance(boltzmann_policy(chain, inv.reward, 1.0), uniform) < 1e-9);
        CHECK(linf_distance(boltzmann_policy(chain, -inv.reward, 1.0), uniform) < 1e-9);
        CHECK(starc_distance(chain.with_discount(g2), inv.reward, -inv.reward).distance ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("equal discounts are rejected") {
        CHECK_THROWS_AS(invisible_reward_discount(chain, g1, g1), PreconditionError);
    }
}

TEST_CASE("transition-invisible reward") {
    const auto [model_env, eval_env] = differing_row_environments(0.9);
    const Eigen::RowVector3d t1 = model_env.row(0, 0);
    const Eigen::RowVector3d t2 = eval_env.row(0, 0);

    const Eigen::Vector3d hand(1.0, -1.0, 3.0);
    CHECK(t1.dot(hand) == doctest::Approx(0.0));
    CHECK(t2.dot(hand) == doctest::Approx(1.0));

    const TransitionInvisibleReward inv = invisible_reward_transition(model_env, eval_env);
    const Eigen::VectorXd m1 = testing::conditional_mean_operator(model_env) * inv.reward.values();
    const Eigen::VectorXd m2 = testing::conditional_mean_operator(eval_env) * inv.reward.values();
    CHECK(m1.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(m2(static_cast<Eigen::Index>(inv.state * 2 + inv.action)) == doctest::Approx(1.0).epsilon(1e-9));
    // Minimum norm: no component along the null space of the two constraints.
    Eigen::Matrix<double, 2, 3> c;
    c << t1, t2;
    const Eigen::Vector3d block = inv.reward.values().segment(static_cast<Eigen::Index>((inv.state * 2 + inv.action) * 3), 3);
    CHECK((block - c.transpose() * (c * c.transpose()).inverse() * c * block).norm() < 1e-9);

    const RewardFunction r = random_reward(3, 3, 2);
    CHECK(linf_distance(mce_policy(model_env, r, 1.0), mce_policy(model_env, r + 5.0 * inv.reward, 1.0)) < 1e-6);

    CHECK_THROWS_AS(invisible_reward_transition(model_env, model_env), PreconditionError);
}

TEST_CASE("chains") {
    const TabularMdp mdp = random_mdp(2, 3, 2, 1.0);
    const RewardFunction r = random_reward(3, 3, 2);
    const TransformChain chain{step::Shaping{PotentialFunction::indicator(3, 0, 1.0)}, step::Scale{2.0}};
    const RewardFunction out = apply_chain(mdp, chain, r);
    const RewardFunction expected = 2.0 * apply_potential_shaping(r, PotentialFunction::indicator(3, 0, 1.0), mdp.discount());
    CHECK((out - expected).max_abs() < 1e-12);

    CHECK_THROWS_AS(validate_chain(mdp, {step::Scale{-1.0}}), ValidationError);
    CHECK_THROWS_AS(validate_chain(mdp, {step::Redistribution{random_reward(1, 3, 2)}}), ValidationError);
}
