#pragma once

#include "starclab/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

namespace starclab {

struct PotentialFunction {
    Eigen::VectorXd phi;

    static PotentialFunction indicator(std::size_t n_states, std::size_t state, double scale = 1.0);
};

/// The reward gamma * phi(s') - phi(s).
RewardFunction shaping_reward(std::size_t n_states, std::size_t n_actions, const PotentialFunction& potential,
                              double discount);

RewardFunction apply_potential_shaping(const RewardFunction& reward, const PotentialFunction& potential,
                                       double discount);

/// max over (s, a) of |E_{S'~tau(s,a)}[delta(s,a,S')]|; zero exactly for S'-redistribution directions.
double max_conditional_mean(const TabularMdp& mdp, const RewardFunction& delta);

/// Seeded element of the S'-redistribution subspace with l2 norm `magnitude`, added to `reward`.
/// Returns `reward` unchanged when the subspace is trivial (one state).
RewardFunction apply_redistribution_noise(const RewardFunction& reward, const TabularMdp& mdp, std::uint64_t seed,
                                          double magnitude);

namespace step {
struct Shaping {
    PotentialFunction potential;
};
/// Adds a tensor whose conditional mean under the transition kernel is zero.
struct Redistribution {
    RewardFunction delta;
};
struct Scale {
    double c;
};
/// Adds an arbitrary tensor; the single free move allowed in a bounded chain.
struct Nudge {
    RewardFunction delta;
};
}  // namespace step

using TransformStep = std::variant<step::Shaping, step::Redistribution, step::Scale, step::Nudge>;
using TransformChain = std::vector<TransformStep>;

const char* step_kind(const TransformStep& s);

/// Throws ValidationError if a redistribution step has a non-zero conditional mean (> 1e-9),
/// a scale step has c <= 0, or a step's shape does not match the MDP.
void validate_chain(const TabularMdp& mdp, const TransformChain& chain);

RewardFunction apply_step(const TabularMdp& mdp, const TransformStep& s, const RewardFunction& reward);
RewardFunction apply_chain(const TabularMdp& mdp, const TransformChain& chain, const RewardFunction& reward);

/**
 * Explicit bases of the subspace a reward can move in without changing its policy order
 * (before positive scaling). Vectors are columns of length S*A*S.
 *
 * shaping_dirs: gamma*1[s'=i] - 1[s=i] for each state i.
 * redistribution_dirs: per (s, a), an orthonormal basis of the complement of tau(s,a,.),
 *   embedded in that block; S*A*(S-1) columns.
 * combined_orthonormal: orthonormal basis of the sum of the two subspaces.
 */
struct InvarianceBasis {
    Eigen::MatrixXd shaping_dirs;
    Eigen::MatrixXd redistribution_dirs;
    Eigen::MatrixXd combined_orthonormal;
};

InvarianceBasis invariance_basis(const TabularMdp& mdp);

/**
 * Structured orthogonal projector onto the complement of the invariance subspace.
 *
 * Removing the S'-redistribution component of block (s, a) leaves a multiple of that block's
 * transition row, so the complement of the redistribution subspace is spanned by the S*A
 * unit rows. Canonical rewards are therefore described by S*A coordinates, from which the
 * projected shaping directions (an S-dimensional subspace) are removed.
 */
class InvarianceProjector {
  public:
    explicit InvarianceProjector(const TabularMdp& mdp);

    /// Coordinates of the canonical representative in the orthonormal unit-row basis.
    Eigen::VectorXd canonical_coordinates(const RewardFunction& reward) const;
    /// The tensor with the given unit-row coordinates.
    RewardFunction embed(const Eigen::VectorXd& coordinates) const;
    RewardFunction canonical(const RewardFunction& reward) const { return embed(canonical_coordinates(reward)); }

    /// Dimension of the canonical subspace, S*(A-1) for a valid MDP.
    std::size_t canonical_dimension() const noexcept { return canonical_dimension_; }
    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    /// Orthonormal basis (in unit-row coordinates) of the projected shaping directions.
    const Eigen::MatrixXd& shaping_coordinates() const noexcept { return shaping_basis_; }

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    Eigen::MatrixXd unit_rows_;      // (S*A) x S, each row tau(s,a,.)/||tau(s,a,.)||
    Eigen::MatrixXd shaping_basis_;  // (S*A) x rank
    std::size_t canonical_dimension_;
};

enum class RewardRelation { identical, shaping_and_redistribution, also_positive_scaling, neither };

const char* to_string(RewardRelation relation);

/// Classifies how two rewards relate through the three order-preserving transformations.
RewardRelation differ_by(const RewardFunction& r1, const RewardFunction& r2, const TabularMdp& mdp);

/// A pure shaping reward under one discount that is non-trivial under another.
struct DiscountInvisibleReward {
    RewardFunction reward;
    PotentialFunction potential;
    /// ||canonical||_2 of `reward` under the evaluation discount.
    double evaluation_canonical_norm;
};

/**
 * R = gamma1*phi(s') - phi(s), chosen so that R is non-trivial under (tau, gamma2). Indicator
 * potentials are tried first, then seeded Gaussian potentials; 100 attempts in total.
 */
DiscountInvisibleReward invisible_reward_discount(const TabularMdp& mdp, double gamma1, double gamma2,
                                                  std::uint64_t seed = 0);

struct TransitionInvisibleReward {
    RewardFunction reward;
    std::size_t state;
    std::size_t action;
};

/**
 * Zero outside the first (s, a) whose rows differ by more than 1e-9; on that block the
 * minimum-norm solution of E_{tau1}[R] = 0 and E_{tau2}[R] = 1.
 */
TransitionInvisibleReward invisible_reward_transition(const TabularMdp& model_env, const TabularMdp& eval_env);

}  // namespace starclab
