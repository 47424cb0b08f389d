#include "starclab/acceptance.hpp"

#include "sampling.hpp"
#include "starclab/behavior.hpp"
#include "starclab/errors.hpp"
#include "starclab/instances.hpp"
#include "starclab/oracles.hpp"
#include "starclab/robustness.hpp"
#include "starclab/starc.hpp"
#include "starclab/transforms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

namespace starclab::acceptance {

namespace {

struct Outcome {
    bool passed;
    std::string detail;
};

std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(3) << x;
    return out.str();
}

PotentialFunction random_potential(std::uint64_t seed, std::size_t n_states) {
    auto rng = detail::make_rng(seed, 0x616363);
    return {detail::standard_normal(rng, static_cast<Eigen::Index>(n_states))};
}

// c * R + shaping + redistribution with seeded pieces.
RewardFunction equivalent_reward(const TabularMdp& mdp, const RewardFunction& r, double c, std::uint64_t seed) {
    const RewardFunction shaped = apply_potential_shaping(r * c, random_potential(seed, mdp.n_states()), mdp.discount());
    return apply_redistribution_noise(shaped, mdp, seed, 1.0);
}

RewardFunction trivial_reward(const TabularMdp& mdp, std::uint64_t seed) {
    const RewardFunction base = RewardFunction::constant(mdp.n_states(), mdp.n_actions(), 0.5 + double(seed % 7));
    return equivalent_reward(mdp, base, 1.0, seed);
}

RewardFunction unit_canonical(const StarcMetric& metric, std::uint64_t seed) {
    const TabularMdp& mdp = metric.mdp();
    const CanonicalReward c = metric.canonicalize(random_reward(seed, mdp.n_states(), mdp.n_actions()));
    return c.canonical * (1.0 / c.norm);
}

Outcome within_time(Outcome o, double seconds, double limit) {
    if (seconds >= limit) {
        o.passed = false;
        o.detail += "; runtime " + fmt(seconds) + " s exceeds " + fmt(limit) + " s";
    }
    return o;
}

Outcome metric_axioms() {
    std::size_t failures = 0;
    double worst_triangle = -1.0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const std::size_t S = 1 + k % 8;
        const std::size_t A = 1 + (k / 8) % 3;
        const TabularMdp mdp = random_mdp(k, S, A, 0.5 + double(k % 5), 0.5 + 0.45 * double(k % 10) / 9.0);
        const StarcMetric metric(mdp);
        const RewardFunction x = random_reward(3 * k, S, A);
        const RewardFunction y = k % 4 == 0 ? equivalent_reward(mdp, x, 2.0, k) : random_reward(3 * k + 1, S, A);
        const RewardFunction z = k % 5 == 0 ? -x : random_reward(3 * k + 2, S, A);
        const double dxy = metric.distance(x, y).distance;
        const double dyx = metric.distance(y, x).distance;
        const double dyz = metric.distance(y, z).distance;
        const double dxz = metric.distance(x, z).distance;
        const double dxx = metric.distance(x, x).distance;
        worst_triangle = std::max(worst_triangle, dxz - dxy - dyz);
        const bool ok = dxy == dyx && dxx < 1e-12 && dxz <= dxy + dyz + 1e-9 &&
                        std::min({dxy, dyz, dxz}) >= -1e-12 && std::max({dxy, dyz, dxz}) <= 1.0 + 1e-12;
        if (!ok) ++failures;
    }
    return {failures == 0, std::to_string(failures) + " failing triples of 1000; worst triangle excess " +
                               fmt(worst_triangle)};
}

Outcome landmark_values() {
    double worst_scale = 0.0;
    double worst_negation = 0.0;
    double worst_trivial = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const TabularMdp mdp = random_mdp(100 + k, 2 + k % 5, 2 + k % 2, 1.0);
        const StarcMetric metric(mdp);
        const RewardFunction r = random_reward(k, mdp.n_states(), mdp.n_actions());
        for (const double c : {0.1, 3.0}) worst_scale = std::max(worst_scale, metric.distance(r, r * c).distance);
        const RewardFunction canon = metric.canonicalize(r).canonical;
        worst_negation = std::max(worst_negation, std::abs(metric.distance(canon, -canon).distance - 1.0));
        worst_trivial =
            std::max(worst_trivial, std::abs(metric.distance(r, trivial_reward(mdp, k)).distance - 0.5));
    }
    const bool ok = worst_scale < 1e-8 && worst_negation <= 1e-8 && worst_trivial <= 1e-8;
    return {ok, "max d(R,cR) " + fmt(worst_scale) + ", max |d(R,-R)-1| " + fmt(worst_negation) +
                    ", max |d(R,trivial)-0.5| " + fmt(worst_trivial)};
}

Outcome oracle_equivalence() {
    static const std::pair<std::size_t, std::size_t> kSizes[] = {{2, 2}, {3, 2}, {4, 2}, {5, 2}, {3, 3},
                                                                 {4, 3}, {6, 2}, {4, 4}, {6, 3}, {10, 2}};
    std::size_t mismatches = 0;
    std::size_t zero_pairs = 0;
    for (std::uint64_t k = 0; k < 200; ++k) {
        const auto [S, A] = kSizes[k % 10];
        const TabularMdp mdp = random_mdp(500 + k, S, A, 1.0);
        const RewardFunction r1 = random_reward(2 * k, S, A);
        RewardFunction r2 = r1;
        RewardFunction left = r1;
        switch (k % 5) {
            case 0: r2 = equivalent_reward(mdp, r1, 0.5 + double(k % 3), k); break;
            case 1: r2 = equivalent_reward(mdp, -r1, 1.0, k); break;
            case 2: r2 = random_reward(2 * k + 1, S, A); break;
            case 3:
                left = trivial_reward(mdp, k);
                r2 = trivial_reward(mdp, k + 1);
                break;
            case 4:
                left = trivial_reward(mdp, k);
                r2 = r1;
                break;
        }
        const bool zero = starc_distance(mdp, left, r2).distance < 1e-8;
        SameOrderOptions options;
        options.seed = k;
        const bool same = same_order_oracle(mdp, left, r2, options);
        if (zero) ++zero_pairs;
        if (zero != same) ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over 200 pairs (" +
                                 std::to_string(zero_pairs) + " at distance zero)"};
}

Outcome model_invariance() {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const TabularMdp mdp = random_mdp(900 + k, 2 + k % 5, 2 + k % 3, 1.0);
        const RewardFunction r = random_reward(k, mdp.n_states(), mdp.n_actions());
        TransformChain chain;
        RewardFunction probe = r;
        for (std::uint64_t step_id = 0; step_id < 1 + k % 3; ++step_id) {
            chain.emplace_back(step::Shaping{random_potential(k * 17 + step_id, mdp.n_states())});
            const RewardFunction noisy = apply_redistribution_noise(probe, mdp, k * 31 + step_id, 1.0);
            chain.emplace_back(step::Redistribution{noisy - probe});
            probe = apply_chain(mdp, chain, r);
        }
        validate_chain(mdp, chain);
        const RewardFunction moved = apply_chain(mdp, chain, r);
        for (const double p : {0.5, 1.0, 5.0}) {
            worst = std::max(worst, linf_distance(boltzmann_policy(mdp, r, p), boltzmann_policy(mdp, moved, p)));
            worst = std::max(worst, linf_distance(mce_policy(mdp, r, p), mce_policy(mdp, moved, p)));
        }
    }
    return {worst < 1e-6, "max l_inf policy change " + fmt(worst) + " over 100 chains and 6 models"};
}

Outcome rescaling_identities() {
    double worst_b = 0.0;
    double worst_c = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const TabularMdp mdp = random_mdp(1300 + k, 2 + k % 5, 2 + k % 3, 1.0);
        const RewardFunction r = random_reward(k, mdp.n_states(), mdp.n_actions());
        const Policy b = boltzmann_policy(mdp, r, 1.0);
        const Policy c = mce_policy(mdp, r, 1.0);
        for (const double s : {0.5, 2.0, 10.0}) {
            worst_b = std::max(worst_b, linf_distance(b, boltzmann_policy(mdp, r * s, 1.0 / s)));
            worst_c = std::max(worst_c, linf_distance(c, mce_policy(mdp, r * s, s)));
        }
    }
    return {worst_b <= 1e-8 && worst_c <= 1e-8,
            "max boltzmann gap " + fmt(worst_b) + ", max mce gap " + fmt(worst_c)};
}

Outcome discount_certificates() {
    std::vector<TabularMdp> envs{three_state_chain(0.9)};
    for (std::uint64_t k = 0; k < 10; ++k) envs.push_back(random_mdp(1700 + k, 3 + k % 3, 2, 1.0));
    std::size_t failures = 0;
    std::size_t count = 0;
    double worst_gap = 0.0;
    double worst_distance = 0.0;
    for (const auto& env : envs) {
        for (const auto& [g1, g2] : {std::pair{0.9, 0.95}, std::pair{0.5, 0.9}}) {
            for (const auto kind : {ModelKind::boltzmann, ModelKind::mce}) {
                const CounterexampleCertificate cert = discount_counterexample(env, g1, g2, kind, 1.0);
                const CertificateCheck check = verify_certificate(cert);
                ++count;
                worst_gap = std::max(worst_gap, cert.policy_gap);
                worst_distance = std::max(worst_distance, std::abs(cert.starc_distance - 1.0));
                if (!(cert.policy_gap < 1e-6 && std::abs(cert.starc_distance - 1.0) <= 1e-6 && check.valid)) {
                    ++failures;
                }
            }
        }
    }
    return {failures == 0, std::to_string(failures) + " failures of " + std::to_string(count) +
                               "; max policy gap " + fmt(worst_gap) + ", max |d-1| " + fmt(worst_distance)};
}

Outcome transition_certificates() {
    std::vector<CounterexampleCertificate> certs;
    const auto [model_env, eval_env] = differing_row_environments(0.9);
    for (const auto kind : {ModelKind::boltzmann, ModelKind::mce}) {
        certs.push_back(transition_counterexample(model_env, eval_env, kind, 1.0));
    }
    const GridworldDemo demo = gridworld_demo(3, 0.9, 1.0);
    certs.push_back(demo.certificate);
    certs.push_back(transition_counterexample(demo.grid.slippery, demo.grid.deterministic, ModelKind::mce, 1.0));
    std::size_t failures = 0;
    double worst_gap = 0.0;
    double min_distance = 1.0;
    for (const auto& cert : certs) {
        worst_gap = std::max(worst_gap, cert.policy_gap);
        min_distance = std::min(min_distance, cert.starc_distance);
        if (!(cert.policy_gap < 1e-6 && cert.starc_distance >= 0.99 && verify_certificate(cert).valid)) ++failures;
    }
    return {failures == 0, std::to_string(failures) + " failures of " + std::to_string(certs.size()) +
                               "; max policy gap " + fmt(worst_gap) + ", min distance " + fmt(min_distance)};
}

Outcome perturbation_certificates() {
    std::size_t failures = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const TabularMdp mdp = random_mdp(2100 + k, 4, 2 + k % 2, 1.0);
        const BehavioralModelSpec model = BehavioralModelSpec::boltzmann(mdp, 1.0);
        for (const double delta : {1e-1, 1e-2, 1e-3}) {
            const CounterexampleCertificate cert = perturbation_counterexample(mdp, model, 1.0, delta,
                                                                               PolicyMetric::l2, k);
            worst_ratio = std::max(worst_ratio, cert.policy_gap / delta);
            const bool norms = std::abs(cert.r1.norm() - 1.0) <= 1e-9 && std::abs(cert.r2.norm() - 1.0) <= 1e-9;
            if (!(cert.policy_gap < delta && std::abs(cert.starc_distance - 1.0) <= 1e-6 && norms &&
                  verify_certificate(cert).valid)) {
                ++failures;
            }
        }
    }
    return {failures == 0, std::to_string(failures) + " failures of 30; max gap/delta " + fmt(worst_ratio)};
}

Outcome transformation_round_trip() {
    std::size_t recompose_failures = 0;
    std::size_t bound_failures = 0;
    std::size_t verify_failures = 0;
    double worst_error = 0.0;
    double worst_ratio = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const TabularMdp mdp = random_mdp(2500 + k, 2 + k % 5, 2 + k % 3, 1.0);
        const RewardFunction r = random_reward(2 * k, mdp.n_states(), mdp.n_actions());
        const RewardFunction target = random_reward(2 * k + 1, mdp.n_states(), mdp.n_actions());
        const TransformChain chain = decompose_transformation(mdp, r, target);
        const double error = (apply_chain(mdp, chain, r) - target).max_abs();
        worst_error = std::max(worst_error, error);
        if (!(error <= 1e-8)) ++recompose_failures;
        const double epsilon = starc_distance(mdp, r, target).distance + 1e-9;
        const TransformationBoundReport report = verify_transformation_bound(mdp, chain, {r}, epsilon);
        const ProbeReport& probe = report.probes.front();
        if (probe.nudge_bound > 0.0) worst_ratio = std::max(worst_ratio, probe.nudge_norm / probe.nudge_bound);
        if (!probe.nudge_ok) ++bound_failures;
        if (!report.holds) ++verify_failures;
    }
    return {recompose_failures == 0 && bound_failures == 0 && verify_failures == 0,
            "recomposition failures " + std::to_string(recompose_failures) + " (max error " + fmt(worst_error) +
                "); nudge bound failures " + std::to_string(bound_failures) + " (max norm/bound " +
                fmt(worst_ratio) + "); verification failures " + std::to_string(verify_failures)};
}

// Tables f, g built by hand over four rewards as in the collision example.
Outcome checker_fidelity() {
    std::vector<std::string> notes;
    bool ok = true;
    std::size_t robust_verdicts = 0;
    std::size_t lemma_failures = 0;
    const auto record_lemma = [&](const ModelTable& f, const ModelTable& g, const HypothesisSet& h,
                                  const TabularMdp& env, const RobustnessVerdict& v) {
        if (!v.robust) return;
        ++robust_verdicts;
        if (!two_epsilon_lemma_check(f, g, h, env, v.epsilon, v.eta)) ++lemma_failures;
    };

    const TabularMdp mdp = random_mdp(3100, 4, 3, 1.0);
    const StarcMetric metric(mdp);
    {
        const RewardFunction r1 = unit_canonical(metric, 1);
        const RewardFunction r2 = r1 + random_reward(2, 4, 3, 0.005);
        const RewardFunction r3 = -r1;
        const RewardFunction r4 = r3 + random_reward(4, 4, 3, 0.005);
        const HypothesisSet h({{"R1", r1}, {"R2", r2}, {"R3", r3}, {"R4", r4}});
        const Policy p1 = random_policy(11, 4, 3);
        const Policy p2 = random_policy(12, 4, 3);
        const Policy p3 = random_policy(13, 4, 3);
        const ModelTable f{h.ids(), {p1, p2, p2, p3}};
        const ModelTable g{h.ids(), {p1, p1, p3, p3}};
        const RobustnessVerdict v = check_epsilon_robust(f, g, h, mdp, 0.1);
        const bool part = v.violations.size() == 1 && v.count(2) == 1 &&
                          v.violations.front().reward_ids == std::vector<std::string>{"R2", "R3"};
        ok = ok && part;
        notes.push_back("collision example: " + std::to_string(v.violations.size()) + " violation(s), " +
                        std::to_string(v.count(2)) + " of condition 2");
        record_lemma(f, g, h, mdp, v);
    }
    for (const auto kind : {ModelKind::boltzmann, ModelKind::mce}) {
        const BehavioralModelSpec f_spec = kind == ModelKind::boltzmann ? BehavioralModelSpec::boltzmann(mdp, 1.0)
                                                                        : BehavioralModelSpec::mce(mdp, 1.0);
        const RewardFunction a = random_reward(21, 4, 3);
        const RewardFunction b = random_reward(22, 4, 3);
        const RewardFunction a2 = apply_potential_shaping(a * 2.0, random_potential(23, 4), mdp.discount());
        const RewardFunction b2 = apply_potential_shaping(b * 2.0, random_potential(24, 4), mdp.discount());
        const HypothesisSet h({{"A", a}, {"A'", a2}, {"B", b}, {"B'", b2}});
        const ModelTable f = materialize_model(f_spec, h.rewards());
        // g = f o t with t swapping each reward and its scaled, shaped partner.
        const ModelTable g{h.ids(), {f.policies[1], f.policies[0], f.policies[3], f.policies[2]}};
        const RobustnessVerdict v = check_epsilon_robust(f, g, h, mdp, 0.0);
        ok = ok && v.robust;
        notes.push_back(std::string("relabeled ") + to_string(kind) + ": " + (v.robust ? "robust" : "not robust") +
                        " at epsilon 0");
        record_lemma(f, g, h, mdp, v);

        const RobustnessVerdict same = check_epsilon_robust(f, f, h, mdp, 0.0);
        const bool part = same.violations.size() == 1 && same.count(4) == 1;
        ok = ok && part;
        notes.push_back(std::string("f = g (") + to_string(kind) + "): " + std::to_string(same.violations.size()) +
                        " violation(s), " + std::to_string(same.count(4)) + " of condition 4");
        record_lemma(f, f, h, mdp, same);
    }
    ok = ok && lemma_failures == 0 && robust_verdicts > 0;
    notes.push_back("lemma held on " + std::to_string(robust_verdicts - lemma_failures) + "/" +
                    std::to_string(robust_verdicts) + " robust verdicts");
    std::string detail;
    for (std::size_t i = 0; i < notes.size(); ++i) detail += (i ? "; " : "") + notes[i];
    return {ok, detail};
}

Outcome optimality_witness() {
    Eigen::MatrixXd t3 = Eigen::MatrixXd::Ones(3, 1);
    const TabularMdp bandit3(1, 3, t3, Eigen::VectorXd::Ones(1), 0.9);
    const CounterexampleCertificate cert = optimality_nonrobustness_witness(bandit3);
    const CertificateCheck check = verify_certificate(cert);
    bool excluded = false;
    try {
        const TabularMdp bandit2(1, 2, Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Ones(1), 0.9);
        optimality_nonrobustness_witness(bandit2);
    } catch (const PreconditionError&) {
        excluded = true;
    }
    return {check.valid && excluded, "1x3 witness: gap " + fmt(cert.policy_gap) + ", distance " +
                                         fmt(cert.starc_distance) + (check.valid ? " (valid)" : " (invalid)") +
                                         "; 1x2 " + (excluded ? "rejected" : "not rejected")};
}

Outcome soundness_zero_case() {
    std::size_t zero_cases = 0;
    std::size_t failures = 0;
    double worst_zero = 0.0;
    double worst_negation = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const TabularMdp mdp = random_mdp(3500 + k, 2 + k % 5, 2 + k % 2, 1.0);
        const RewardFunction r = random_reward(k, mdp.n_states(), mdp.n_actions());
        const RewardFunction equivalent = equivalent_reward(mdp, r, 0.5 + double(k % 4), k);
        if (starc_distance(mdp, r, equivalent).distance < 1e-8) {
            ++zero_cases;
            const double gap = regret_gap(mdp, r, equivalent).normalized_regret;
            worst_zero = std::max(worst_zero, gap);
            if (!(gap < 1e-8)) ++failures;
        }
        const double neg = std::abs(regret_gap(mdp, r, -r).normalized_regret - 1.0);
        worst_negation = std::max(worst_negation, neg);
        if (!(neg <= 1e-8)) ++failures;
    }
    return {failures == 0 && zero_cases > 0, std::to_string(zero_cases) + " zero-distance pairs, max regret " +
                                                 fmt(worst_zero) + "; max |regret(R,-R)-1| " +
                                                 fmt(worst_negation)};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit;
    std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {1, "metric axioms", 60.0, metric_axioms},
        {2, "landmark distances", 0.0, landmark_values},
        {3, "distance zero iff same policy order", 300.0, oracle_equivalence},
        {4, "model invariance to shaping and redistribution", 0.0, model_invariance},
        {5, "temperature rescaling identities", 0.0, rescaling_identities},
        {6, "discount counterexample certificates", 10.0, discount_certificates},
        {7, "transition counterexample certificates", 10.0, transition_certificates},
        {8, "perturbation counterexample certificates", 30.0, perturbation_certificates},
        {9, "transformation decomposition round trip", 0.0, transformation_round_trip},
        {10, "robustness checker fidelity", 0.0, checker_fidelity},
        {11, "optimality model witness", 0.0, optimality_witness},
        {12, "soundness zero case", 0.0, soundness_zero_case},
    };
    return all;
}

}  // namespace

std::vector<int> criterion_ids() {
    std::vector<int> ids;
    for (const auto& c : criteria()) ids.push_back(c.id);
    return ids;
}

CriterionResult run_criterion(int id) {
    const auto& all = criteria();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == all.end()) throw ValidationError("unknown acceptance criterion " + std::to_string(id));
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome{false, ""};
    try {
        outcome = it->run();
    } catch (const std::exception& e) {
        outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (it->time_limit > 0.0) outcome = within_time(outcome, seconds, it->time_limit);
    return {id, it->name, outcome.passed, outcome.detail, seconds};
}

std::vector<CriterionResult> run_suite() {
    std::vector<CriterionResult> out;
    for (const int id : criterion_ids()) out.push_back(run_criterion(id));
    return out;
}

std::string format_line(const CriterionResult& r) {
    std::ostringstream out;
    out << (r.passed ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << r.name << "  (" << std::fixed
        << std::setprecision(2) << r.seconds << " s)  " << r.detail;
    return out.str();
}

}  // namespace starclab::acceptance
