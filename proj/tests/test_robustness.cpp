#include "starclab/behavior.hpp"
#include "starclab/errors.hpp"
#include "starclab/instances.hpp"
#include "starclab/robustness.hpp"
#include "starclab/starc.hpp"
#include "starclab/transforms.hpp"
#include "support.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>

using namespace starclab;

namespace {

RewardFunction unit_canonical(const TabularMdp& mdp, std::uint64_t seed) {
    const RewardFunction c = canonicalize(mdp, random_reward(seed, mdp.n_states(), mdp.n_actions())).canonical;
    return c * (1.0 / c.norm());
}

// Uniform policy moved by t along e(0,0) - e(0,1).
Policy shifted(std::size_t S, std::size_t A, double t) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A), 1.0 / double(A));
    p(0, 0) += t;
    p(0, 1) -= t;
    return Policy(p);
}

double frobenius(const Policy& a, const Policy& b) { return (a.probs() - b.probs()).norm(); }

}  // namespace

TEST_CASE("checker on hand-built tables") {
    const TabularMdp mdp = random_mdp(31, 4, 3, 1.0);
    const RewardFunction r1 = unit_canonical(mdp, 1);
    const RewardFunction r2 = r1 + random_reward(2, 4, 3, 0.005);
    const RewardFunction r3 = -r1;
    const RewardFunction r4 = r3 + random_reward(4, 4, 3, 0.005);
    const HypothesisSet h({{"R1", r1}, {"R2", r2}, {"R3", r3}, {"R4", r4}});
    REQUIRE(starc_distance(mdp, r1, r2).distance < 0.1);
    REQUIRE(starc_distance(mdp, r3, r4).distance < 0.1);

    const Policy p1 = random_policy(11, 4, 3), p2 = random_policy(12, 4, 3), p3 = random_policy(13, 4, 3);

    SUBCASE("collision example") {
        const ModelTable f{h.ids(), {p1, p2, p2, p3}};
        const ModelTable g{h.ids(), {p1, p1, p3, p3}};
        const RobustnessVerdict v = check_epsilon_robust(f, g, h, mdp, 0.1);
        CHECK_FALSE(v.robust);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].condition == 2);
        CHECK(v.violations[0].reward_ids == std::vector<std::string>{"R2", "R3"});
        CHECK(v.violations[0].measured == doctest::Approx(starc_distance(mdp, r2, r3).distance));

        // Without the f-collision the same g is fine at this epsilon.
        const ModelTable f_ok{h.ids(), {p1, p1, p3, p3}};
        const ModelTable g_ok{h.ids(), {p1, p1, p3, p3}};
        CHECK(check_epsilon_robust(f_ok, g_ok, h, mdp, 0.1).count(4) == 1);
    }
    SUBCASE("f equal to g") {
        const ModelTable f{h.ids(), {p1, p2, p3, p1}};
        const RobustnessVerdict v = check_epsilon_robust(f, f, h, mdp, 1.0);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].condition == 4);
        CHECK(min_robust_epsilon(f, f, h, mdp) == std::numeric_limits<double>::infinity());
    }
    SUBCASE("g outside the image of f") {
        const ModelTable f{h.ids(), {p1, p1, p2, p2}};
        const ModelTable g{h.ids(), {p1, p1, p2, p3}};
        const RobustnessVerdict v = check_epsilon_robust(f, g, h, mdp, 1.0);
        CHECK(v.count(3) == 1);
        CHECK(min_robust_epsilon(f, g, h, mdp) == std::numeric_limits<double>::infinity());
    }
}

TEST_CASE("relabelings of a Boltzmann model") {
    const TabularMdp mdp = random_mdp(32, 4, 3, 1.0);
    const BehavioralModelSpec spec = BehavioralModelSpec::boltzmann(mdp, 1.0);
    const RewardFunction a = random_reward(21, 4, 3);
    const RewardFunction b = random_reward(22, 4, 3);

    SUBCASE("pure shaping partners leave g equal to f") {
        const RewardFunction a2 = apply_potential_shaping(a, PotentialFunction::indicator(4, 1, 3.0), mdp.discount());
        const RewardFunction b2 = apply_potential_shaping(b, PotentialFunction::indicator(4, 2, -2.0), mdp.discount());
        const HypothesisSet h({{"A", a}, {"A'", a2}, {"B", b}, {"B'", b2}});
        const ModelTable f = materialize_model(spec, h.rewards());
        const ModelTable g{h.ids(), {f.policies[1], f.policies[0], f.policies[3], f.policies[2]}};
        const RobustnessVerdict v = check_epsilon_robust(f, g, h, mdp, 0.0);
        REQUIRE(v.violations.size() == 1);
        CHECK(v.violations[0].condition == 4);
    }
    SUBCASE("scaled and shaped partners") {
        const RewardFunction a2 = apply_potential_shaping(2.0 * a, PotentialFunction::indicator(4, 1, 3.0), mdp.discount());
        const RewardFunction b2 = apply_potential_shaping(3.0 * b, PotentialFunction::indicator(4, 2, -2.0), mdp.discount());
        const HypothesisSet h({{"A", a}, {"A'", a2}, {"B", b}, {"B'", b2}});
        const ModelTable f = materialize_model(spec, h.rewards());
        const ModelTable g{h.ids(), {f.policies[1], f.policies[0], f.policies[3], f.policies[2]}};
        const RobustnessVerdict v = check_epsilon_robust(f, g, h, mdp, 0.0);
        CHECK(v.robust);
        CHECK(min_robust_epsilon(f, g, h, mdp) <= 1e-8);
        CHECK(two_epsilon_lemma_check(f, g, h, mdp, 0.0));
        // Every g-collision sits at distance zero.
        for (std::size_t i = 0; i < h.size(); ++i)
            for (std::size_t j = i + 1; j < h.size(); ++j)
                if (linf_distance(g.policies[i], g.policies[j]) <= kPolicyEqualityTolerance)
                    CHECK(starc_distance(mdp, h[i].reward, h[j].reward).distance <= 1e-8);
    }
    SUBCASE("bounded nudges") {
        const RewardFunction a2 = a + random_reward(23, 4, 3, 0.2);
        const RewardFunction b2 = b + random_reward(24, 4, 3, 0.2);
        const HypothesisSet h({{"A", a}, {"A'", a2}, {"B", b}, {"B'", b2}});
        const ModelTable f = materialize_model(spec, h.rewards());
        const ModelTable g{h.ids(), {f.policies[1], f.policies[0], f.policies[3], f.policies[2]}};
        const double d0 = std::max(starc_distance(mdp, a, a2).distance, starc_distance(mdp, b, b2).distance);
        const double eps = min_robust_epsilon(f, g, h, mdp);
        CHECK(eps <= d0 + 1e-8);
        CHECK(check_epsilon_robust(f, g, h, mdp, eps).robust);
        CHECK(two_epsilon_lemma_check(f, g, h, mdp, eps));
    }
}

TEST_CASE("lemma check detects a broken triangle") {
    // eta-equality is not transitive. Each g-policy is within eta of an f-policy of an equivalent reward
    // and the two g-policies of R and -R are within eta of each other, yet no f-policy reaches a g-policy
    // of a distant reward. The pair is robust at 0 and the lemma fails. f(2R) sits far from g(2R) so that
    // f and g are distinct.
    const TabularMdp mdp = random_mdp(33, 3, 3, 1.0);
    const RewardFunction r = unit_canonical(mdp, 5);
    const HypothesisSet h({{"R", r}, {"2R", 2.0 * r}, {"-R", -r}});
    const double eta = 1e-3;
    const ModelTable f{h.ids(), {shifted(3, 3, 0.0), shifted(3, 3, -5.0 * eta), shifted(3, 3, 2.7 * eta)}};
    const ModelTable g{h.ids(), {shifted(3, 3, 0.9 * eta), shifted(3, 3, 0.9 * eta), shifted(3, 3, 1.8 * eta)}};
    REQUIRE(check_epsilon_robust(f, g, h, mdp, 0.0, eta).robust);
    CHECK_FALSE(two_epsilon_lemma_check(f, g, h, mdp, 0.0, eta));

    const ModelTable collide{h.ids(), {shifted(3, 3, 0.0), shifted(3, 3, 0.0), shifted(3, 3, 0.0)}};
    CHECK_THROWS_AS(two_epsilon_lemma_check(collide, g, h, mdp, 0.0, eta), PreconditionError);
}

TEST_CASE("transformation bound") {
    const TabularMdp mdp = random_mdp(34, 4, 3, 1.0);
    const RewardFunction r = 2.0 * unit_canonical(mdp, 7);
    const std::vector<RewardFunction> probes{r, random_reward(8, 4, 3), random_reward(9, 4, 3)};

    SUBCASE("order-preserving chains") {
        const TransformChain chain{step::Shaping{PotentialFunction::indicator(4, 3, 1.5)},
                                   step::Redistribution{apply_redistribution_noise(RewardFunction::zeros(4, 3), mdp, 2, 1.0)},
                                   step::Scale{0.25}};
        CHECK(verify_transformation_bound(mdp, chain, probes, 0.0).holds);
    }
    SUBCASE("two nudges are rejected") {
        const TransformChain chain{step::Nudge{random_reward(1, 4, 3)}, step::Nudge{random_reward(2, 4, 3)}};
        CHECK_THROWS_AS(verify_transformation_bound(mdp, chain, probes, 0.5), ValidationError);
    }
    SUBCASE("nudges at and beyond the bound") {
        const double eps = 0.1;
        const double bound = nudge_bound(2.0, eps);
        CHECK(bound == doctest::Approx(2.0 * std::sin(2.0 * std::asin(eps / 2.0))));

        // Directions in the plane of r and an orthogonal canonical reward.
        const Eigen::VectorXd u = r.values() / r.norm();
        Eigen::VectorXd w = unit_canonical(mdp, 10).values();
        w -= u.dot(w) * u;
        w.normalize();
        const auto worst_distance = [&](double norm) {
            double worst = 0.0;
            for (int k = 0; k < 4000; ++k) {
                const double phi = 2.0 * M_PI * k / 4000.0;
                const RewardFunction nudge(4, 3, norm * (std::cos(phi) * u + std::sin(phi) * w));
                worst = std::max(worst, verify_transformation_bound(mdp, {step::Nudge{nudge}}, {r}, eps).probes[0].distance);
            }
            return worst;
        };
        CHECK(worst_distance(bound) <= eps + 1e-8);
        CHECK(worst_distance(2.0 * bound) > eps);
    }
}

TEST_CASE("decompose transformation") {
    const TabularMdp mdp = random_mdp(35, 4, 3, 1.0);
    const RewardFunction r = random_reward(11, 4, 3);
    const auto nudge_norm = [](const TransformChain& chain) {
        double n = 0.0;
        for (const auto& s : chain)
            if (const auto* nudge = std::get_if<step::Nudge>(&s)) n = nudge->delta.norm();
        return n;
    };

    SUBCASE("identity") {
        const TransformChain chain = decompose_transformation(mdp, r, r);
        CHECK(nudge_norm(chain) < 1e-12);
        CHECK((apply_chain(mdp, chain, r) - r).max_abs() < 1e-8);
    }
    SUBCASE("order-preserving target") {
        const RewardFunction target = 2.0 * apply_potential_shaping(r, PotentialFunction::indicator(4, 0, 1.0), mdp.discount());
        const TransformChain chain = decompose_transformation(mdp, r, target);
        CHECK(nudge_norm(chain) < 1e-12);
        CHECK((apply_chain(mdp, chain, r) - target).max_abs() < 1e-8);
        CHECK(verify_transformation_bound(mdp, chain, {r}, 0.0).holds);
    }
    SUBCASE("pair at distance 0.3") {
        // Target direction rotated away from r's canonical direction so that d = 0.3.
        const Eigen::VectorXd u = unit_canonical(mdp, 12).values();
        Eigen::VectorXd w = unit_canonical(mdp, 13).values();
        w -= u.dot(w) * u;
        w.normalize();
        const double theta = 2.0 * std::asin(0.3);
        const RewardFunction source(4, 3, 3.0 * u);
        const RewardFunction target(4, 3, 0.5 * (std::cos(theta) * u + std::sin(theta) * w));
        const double d = starc_distance(mdp, source, target).distance;
        REQUIRE(d == doctest::Approx(0.3).epsilon(1e-9));

        const TransformChain chain = decompose_transformation(mdp, source, target);
        CHECK((apply_chain(mdp, chain, source) - target).max_abs() < 1e-8);

        // Scaled onto the right triangle the nudge is tan(theta) times the reached canonical norm, which
        // is the sine bound evaluated at the chord 2d rather than at d.
        const TransformationBoundReport report = verify_transformation_bound(mdp, chain, {source}, 2.0 * d);
        CHECK(report.holds);
        const ProbeReport tight = verify_transformation_bound(mdp, chain, {source}, d + 1e-9).probes[0];
        CHECK(tight.distance_ok);
        CHECK(tight.nudge_norm / tight.nudge_bound == doctest::Approx(std::sin(theta) / std::sin(2.0 * std::asin(d / 2.0))));
    }
    SUBCASE("trivial source and target") {
        const RewardFunction trivial = RewardFunction::constant(4, 3, 2.0);
        CHECK_THROWS_AS(decompose_transformation(mdp, r, trivial), PreconditionError);
        const TransformChain chain = decompose_transformation(mdp, trivial, r);
        CHECK((apply_chain(mdp, chain, trivial) - r).max_abs() < 1e-8);
    }
}

TEST_CASE("policy metrics") {
    const TabularMdp mdp = random_mdp(36, 3, 2, 1.0);
    const Policy a = random_policy(1, 3, 2), b = random_policy(2, 3, 2);
    CHECK(policy_distance(PolicyMetric::l2, mdp, a, b) == doctest::Approx(frobenius(a, b)));
    CHECK(policy_distance(PolicyMetric::linf, mdp, a, b) == doctest::Approx((a.probs() - b.probs()).cwiseAbs().maxCoeff()));
    CHECK(policy_distance(PolicyMetric::occupancy_l2, mdp, a, b) ==
          doctest::Approx((occupancy_measure(mdp, a).triples - occupancy_measure(mdp, b).triples).norm()));
    CHECK(policy_metric_from_string("occupancy_l2") == PolicyMetric::occupancy_l2);
    CHECK_THROWS_AS(policy_metric_from_string("kl"), ValidationError);
}

TEST_CASE("separation search") {
    const TabularMdp mdp = random_mdp(37, 4, 2, 1.0);
    const BehavioralModelSpec spec = BehavioralModelSpec::boltzmann(mdp, 1.0);

    const auto found = separation_witness_search(spec, mdp, PolicyMetric::l2, 0.9, 0.01, 1, 1000);
    REQUIRE(found);
    CHECK(found->samples_used <= 1000);
    CHECK(starc_distance(mdp, found->r1, found->r2).distance > 0.9);
    CHECK(frobenius(boltzmann_policy(mdp, found->r1, 1.0), boltzmann_policy(mdp, found->r2, 1.0)) <= 0.01);

    CHECK_FALSE(separation_witness_search(spec, mdp, PolicyMetric::l2, 0.5, 0.0, 1, 200));
    CHECK_FALSE(separation_witness_search(spec, mdp, PolicyMetric::l2, 1.01, 0.5, 1, 200));
}

TEST_CASE("perturbation counterexample") {
    const TabularMdp mdp = random_mdp(38, 4, 2, 1.0);
    const CounterexampleCertificate cert =
        perturbation_counterexample(mdp, BehavioralModelSpec::boltzmann(mdp, 1.0), 1.0, 1e-2);
    CHECK(cert.r1.norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cert.r2.norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(starc_distance(mdp, cert.r1, cert.r2).distance == doctest::Approx(1.0).epsilon(1e-6));
    const double gap = frobenius(boltzmann_policy(mdp, cert.r1, 1.0), boltzmann_policy(mdp, cert.r2, 1.0));
    CHECK(gap < 1e-2);
    CHECK(gap >= 0.5e-2);
    CHECK(verify_certificate(cert).valid);

    CHECK_THROWS_AS(perturbation_counterexample(mdp, BehavioralModelSpec::optimal(mdp), 1.0, 1e-2), PreconditionError);
}

TEST_CASE("discount counterexample") {
    const TabularMdp chain = three_state_chain(0.9);
    const CounterexampleCertificate cert = discount_counterexample(chain, 0.9, 0.95, ModelKind::boltzmann, 1.0);
    CHECK(verify_certificate(cert).valid);
    CHECK(linf_distance(boltzmann_policy(chain, cert.r1, 1.0), boltzmann_policy(chain, cert.r2, 1.0)) < 1e-6);
    CHECK(starc_distance(chain.with_discount(0.95), cert.r1, cert.r2).distance == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(verify_certificate(discount_counterexample(chain, 0.95, 0.9, ModelKind::boltzmann, 1.0)).valid);
    CHECK(verify_certificate(discount_counterexample(chain, 0.9, 0.95, ModelKind::mce, 2.0)).valid);
    CHECK_THROWS_AS(discount_counterexample(chain, 0.9, 0.9, ModelKind::boltzmann, 1.0), PreconditionError);
}

TEST_CASE("transition counterexample") {
    const auto [model_env, eval_env] = differing_row_environments(0.9);
    const CounterexampleCertificate cert = transition_counterexample(model_env, eval_env, ModelKind::boltzmann, 1.0);
    CHECK(verify_certificate(cert).valid);
    CHECK(linf_distance(boltzmann_policy(model_env, cert.r1, 1.0), boltzmann_policy(model_env, cert.r2, 1.0)) < 1e-6);
    CHECK(starc_distance(eval_env, cert.r1, cert.r2).distance >= 0.99);
    CHECK_THROWS_AS(transition_counterexample(model_env, model_env, ModelKind::boltzmann, 1.0), PreconditionError);
}

TEST_CASE("gridworld") {
    const auto start = std::chrono::steady_clock::now();
    const GridworldDemo demo = gridworld_demo(3, 0.9, 1.0);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 1.0);
    CHECK(verify_certificate(demo.certificate).valid);

    const Eigen::VectorXd means = testing::conditional_mean_operator(demo.grid.slippery) * (demo.r2 - demo.r1).values();
    CHECK(means.cwiseAbs().maxCoeff() < 1e-9);

    // Deterministic world: R1 prefers right (3) over left (2) everywhere, R2 the reverse.
    const Eigen::MatrixXd q1 = optimal_values(demo.grid.deterministic, demo.r1).q.values;
    const Eigen::MatrixXd q2 = optimal_values(demo.grid.deterministic, demo.r2).q.values;
    for (Eigen::Index s = 0; s < 9; ++s) {
        CHECK(q1(s, 3) > q1(s, 2));
        CHECK(q2(s, 2) > q2(s, 3));
    }

    // Slippery rightward step from the origin reaches (1,0), (1,1) and (1,2); only these carry reward.
    const RewardFunction move = movement_reward(demo.grid);
    CHECK(move == demo.r1);
    const auto at = [&](const RewardFunction& rf, std::size_t s, std::size_t a, std::size_t t) {
        return rf.values()(static_cast<Eigen::Index>((s * 4 + a) * 9 + t));
    };
    CHECK(at(move, 0, 3, 1) == 1.0);
    CHECK(at(move, 0, 2, 2) == -1.0);
    CHECK(at(move, 0, 0, 3) == 0.0);
    const RewardFunction delta = demo.r2 - demo.r1;
    CHECK(at(delta, 0, 3, 1) == doctest::Approx(-2.0));
    CHECK(at(delta, 0, 3, 4) == doctest::Approx(1.0));
    CHECK(at(delta, 0, 3, 7) == doctest::Approx(1.0));

    CHECK_THROWS_AS(make_gridworld(1, 0.9), ValidationError);
}

TEST_CASE("optimality witness") {
    const TabularMdp bandit = testing::single_state(3, 0.9);
    const RewardFunction a = testing::single_state_reward({1.0, 0.0, 0.0});
    const RewardFunction b = testing::single_state_reward({1.0, 0.5, 0.0});
    CHECK(optimal_policy_uniform(bandit, a) == optimal_policy_uniform(bandit, b));
    const Eigen::VectorXd ca = testing::dense_canonical(bandit, a.values());
    const Eigen::VectorXd cb = testing::dense_canonical(bandit, b.values());
    const double dense = 0.5 * (ca / ca.norm() - cb / cb.norm()).norm();
    CHECK(dense > 0.0);
    CHECK(starc_distance(bandit, a, b).distance == doctest::Approx(dense));

    const CounterexampleCertificate cert = optimality_nonrobustness_witness(bandit);
    CHECK(verify_certificate(cert).valid);
    CHECK(optimal_policy_uniform(bandit, cert.r1) == optimal_policy_uniform(bandit, cert.r2));

    CHECK_THROWS_AS(optimality_nonrobustness_witness(testing::single_state(2, 0.9)), PreconditionError);
    CHECK(verify_certificate(optimality_nonrobustness_witness(random_mdp(39, 3, 2, 1.0), 0, 100)).valid);
}

TEST_CASE("certificate verification catches tampering") {
    const auto [model_env, eval_env] = differing_row_environments(0.9);
    CounterexampleCertificate cert = transition_counterexample(model_env, eval_env, ModelKind::mce, 1.0);
    REQUIRE(verify_certificate(cert).valid);
    cert.r2 = cert.r2 + random_reward(1, 3, 2, 0.5);
    CHECK_FALSE(verify_certificate(cert).valid);
}
