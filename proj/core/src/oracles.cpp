#include "starclab/oracles.hpp"

#include "sampling.hpp"
#include "starclab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace starclab {

std::vector<std::size_t> DeterministicPolicyIndex::actions(std::size_t n_states, std::size_t n_actions) const {
    std::vector<std::size_t> out(n_states);
    std::uint64_t rest = value;
    for (std::size_t s = 0; s < n_states; ++s) {
        out[s] = static_cast<std::size_t>(rest % n_actions);
        rest /= n_actions;
    }
    return out;
}

Policy DeterministicPolicyIndex::policy(std::size_t n_states, std::size_t n_actions) const {
    return Policy::deterministic(actions(n_states, n_actions), n_actions);
}

std::size_t deterministic_policy_count(const TabularMdp& mdp, std::size_t cap) {
    std::size_t count = 1;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        if (count > cap / mdp.n_actions()) {
            throw CapExceededError("|A|^|S| exceeds the enumeration cap of " + std::to_string(cap) +
                                   "; use a sampled search instead");
        }
        count *= mdp.n_actions();
    }
    if (count > cap) {
        throw CapExceededError("|A|^|S| exceeds the enumeration cap of " + std::to_string(cap) +
                               "; use a sampled search instead");
    }
    return count;
}

std::vector<Policy> enumerate_deterministic_policies(const TabularMdp& mdp, std::size_t cap) {
    const std::size_t count = deterministic_policy_count(mdp, cap);
    std::vector<Policy> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        out.push_back(DeterministicPolicyIndex{i}.policy(mdp.n_states(), mdp.n_actions()));
    }
    return out;
}

Eigen::VectorXd deterministic_returns(const TabularMdp& mdp, const RewardFunction& reward, std::size_t cap) {
    reward.check_shape(mdp);
    const std::size_t count = deterministic_policy_count(mdp, cap);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    const Eigen::MatrixXd mean = expected_reward(mdp, reward);

    Eigen::VectorXd out(static_cast<Eigen::Index>(count));
    Eigen::MatrixXd system(S, S);
    Eigen::VectorXd r(S);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto actions = DeterministicPolicyIndex{i}.actions(mdp.n_states(), mdp.n_actions());
        for (Eigen::Index s = 0; s < S; ++s) {
            const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(s)]);
            system.row(s) = -mdp.discount() * mdp.transition().row(s * A + a);
            system(s, s) += 1.0;
            r[s] = mean(s, a);
        }
        const Eigen::VectorXd v = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(r);
        out[static_cast<Eigen::Index>(i)] = mdp.initial_distribution().dot(v);
    }
    return out;
}

namespace {

int banded_sign(double x, double band) {
    if (x > band) return 1;
    if (x < -band) return -1;
    return 0;
}

}  // namespace

SameOrderReport same_order_report(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2,
                                  const SameOrderOptions& options) {
    const Eigen::VectorXd j1 = deterministic_returns(mdp, r1, options.cap);
    const Eigen::VectorXd j2 = deterministic_returns(mdp, r2, options.cap);

    SameOrderReport report{true, 0, 0, options.stochastic_pairs, 0};
    const Eigen::Index n = j1.size();
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a + 1; b < n; ++b) {
            ++report.deterministic_pairs;
            if (banded_sign(j1[a] - j1[b], options.band) != banded_sign(j2[a] - j2[b], options.band)) {
                ++report.deterministic_disagreements;
            }
        }
    }
    for (std::size_t k = 0; k < options.stochastic_pairs; ++k) {
        const Policy pa = random_policy(options.seed * 1000003 + 2 * k, mdp.n_states(), mdp.n_actions());
        const Policy pb = random_policy(options.seed * 1000003 + 2 * k + 1, mdp.n_states(), mdp.n_actions());
        const double d1 = policy_return(mdp, r1, pa) - policy_return(mdp, r1, pb);
        const double d2 = policy_return(mdp, r2, pa) - policy_return(mdp, r2, pb);
        if (banded_sign(d1, options.band) != banded_sign(d2, options.band)) ++report.stochastic_disagreements;
    }
    report.same_order = report.deterministic_disagreements == 0 && report.stochastic_disagreements == 0;
    return report;
}

std::size_t horizon_for_bias(double discount, double max_abs_reward, double bias) {
    if (!(bias > 0.0)) throw ValidationError("bias bound must be positive");
    if (max_abs_reward == 0.0) return 1;
    const double ratio = bias * (1.0 - discount) / max_abs_reward;
    if (ratio >= 1.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(discount))) + 1;
}

MonteCarloEstimate monte_carlo_return(const TabularMdp& mdp, const RewardFunction& reward, const Policy& policy,
                                      std::size_t horizon, std::size_t n_rollouts, std::uint64_t seed) {
    reward.check_shape(mdp);
    policy.check_shape(mdp);
    if (n_rollouts == 0) throw ValidationError("monte_carlo_return needs at least one rollout");
    auto rng = detail::make_rng(seed, 0x6d6378);
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());

    // Welford accumulation keeps the variance exactly zero for constant returns.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t k = 1; k <= n_rollouts; ++k) {
        Eigen::Index s = detail::sample_index(rng, mdp.initial_distribution());
        double discount = 1.0;
        double total = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const Eigen::Index a = detail::sample_index(rng, policy.probs().row(s));
            const Eigen::Index next = detail::sample_index(rng, mdp.transition().row(s * A + a));
            total += discount * reward(static_cast<std::size_t>(s), static_cast<std::size_t>(a),
                                       static_cast<std::size_t>(next));
            discount *= mdp.discount();
            s = next;
        }
        const double delta = total - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (total - mean);
    }
    const double n = static_cast<double>(n_rollouts);
    const double variance = n_rollouts > 1 ? m2 / (n - 1.0) : 0.0;
    return {mean, std::sqrt(variance / n)};
}

RegretWitness regret_witness_search(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2,
                                    std::size_t cap) {
    const Eigen::VectorXd j1 = deterministic_returns(mdp, r1, cap);
    const Eigen::VectorXd j2 = deterministic_returns(mdp, r2, cap);
    const auto n = static_cast<std::size_t>(j1.size());
    const double range = j1.maxCoeff() - j1.minCoeff();
    const auto make = [&](std::size_t i) {
        return DeterministicPolicyIndex{i}.policy(mdp.n_states(), mdp.n_actions());
    };
    if (range < 1e-12) return {make(0), make(0), 0.0, 0.0, range, true};

    // Sweep policies in increasing J2. For a candidate pi2 every pi1 with J2(pi1) <= J2(pi2),
    // ties included, is admissible, so the best pi1 is a running J1 maximum.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return j2[static_cast<Eigen::Index>(a)] < j2[static_cast<Eigen::Index>(b)];
    });

    double best_regret = -1.0;
    std::size_t best_pi1 = order[0];
    std::size_t best_pi2 = order[0];
    std::size_t running_max = order[0];
    std::size_t group_start = 0;
    while (group_start < n) {
        std::size_t group_end = group_start;
        const double level = j2[static_cast<Eigen::Index>(order[group_start])];
        while (group_end < n && j2[static_cast<Eigen::Index>(order[group_end])] == level) {
            if (j1[static_cast<Eigen::Index>(order[group_end])] > j1[static_cast<Eigen::Index>(running_max)]) {
                running_max = order[group_end];
            }
            ++group_end;
        }
        for (std::size_t k = group_start; k < group_end; ++k) {
            const double regret =
                j1[static_cast<Eigen::Index>(running_max)] - j1[static_cast<Eigen::Index>(order[k])];
            if (regret > best_regret) {
                best_regret = regret;
                best_pi1 = running_max;
                best_pi2 = order[k];
            }
        }
        group_start = group_end;
    }
    return {make(best_pi1), make(best_pi2), best_regret / range, best_regret, range, false};
}

}  // namespace starclab
