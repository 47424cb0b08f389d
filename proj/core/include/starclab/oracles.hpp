#pragma once

#include "starclab/mdp.hpp"

#include <cstdint>
#include <vector>

namespace starclab {

/// Deterministic policy encoded as base-|A| digits, state 0 in the least significant digit.
struct DeterministicPolicyIndex {
    std::uint64_t value;

    std::vector<std::size_t> actions(std::size_t n_states, std::size_t n_actions) const;
    Policy policy(std::size_t n_states, std::size_t n_actions) const;
};

inline constexpr std::size_t kDefaultEnumerationCap = 4096;

/// |A|^|S|, or CapExceededError when it exceeds `cap`.
std::size_t deterministic_policy_count(const TabularMdp& mdp, std::size_t cap = kDefaultEnumerationCap);

std::vector<Policy> enumerate_deterministic_policies(const TabularMdp& mdp,
                                                     std::size_t cap = kDefaultEnumerationCap);

/// J(pi) for every deterministic policy, in index order.
Eigen::VectorXd deterministic_returns(const TabularMdp& mdp, const RewardFunction& reward,
                                      std::size_t cap = kDefaultEnumerationCap);

struct SameOrderOptions {
    std::size_t cap = kDefaultEnumerationCap;
    std::size_t stochastic_pairs = 200;
    std::uint64_t seed = 0;
    /// Return differences within this band count as ties.
    double band = 1e-10;
};

struct SameOrderReport {
    bool same_order;
    std::size_t deterministic_pairs;
    std::size_t deterministic_disagreements;
    std::size_t stochastic_pairs;
    std::size_t stochastic_disagreements;
};

/// Brute-force comparison of the policy orderings induced by two rewards.
SameOrderReport same_order_report(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2,
                                  const SameOrderOptions& options = {});

inline bool same_order_oracle(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2,
                              const SameOrderOptions& options = {}) {
    return same_order_report(mdp, r1, r2, options).same_order;
}

struct MonteCarloEstimate {
    double estimate;
    double standard_error;
};

/// Smallest horizon H with gamma^H * max|R| / (1 - gamma) below `bias`.
std::size_t horizon_for_bias(double discount, double max_abs_reward, double bias);

/// Truncated discounted return averaged over seeded rollouts.
MonteCarloEstimate monte_carlo_return(const TabularMdp& mdp, const RewardFunction& reward, const Policy& policy,
                                      std::size_t horizon, std::size_t n_rollouts, std::uint64_t seed);

struct RegretWitness {
    Policy pi1;
    Policy pi2;
    double normalized_regret;
    double regret;
    /// max_pi J1 - min_pi J1 over deterministic policies.
    double range;
    bool trivial;
};

/// Maximizing pair over deterministic policies subject to J2(pi2) >= J2(pi1).
RegretWitness regret_witness_search(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2,
                                    std::size_t cap = kDefaultEnumerationCap);

}  // namespace starclab
