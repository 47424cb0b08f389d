#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace starclab {

/// Probability rows and distributions must sum to one within this slack.
inline constexpr double kProbabilityTolerance = 1e-9;

/**
 * A finite MDP without a reward: transition kernel, initial distribution and discount.
 *
 * The transition kernel is stored as an (S*A) x S matrix whose row `s*A + a` is the
 * next-state distribution of taking action `a` in state `s`. Instances are immutable and
 * always valid: the constructor checks every invariant (stochastic rows, stochastic initial
 * distribution, discount in (0,1), every state reachable from the initial support) and
 * throws ValidationError naming the first violation.
 */
class TabularMdp {
  public:
    TabularMdp(std::size_t n_states, std::size_t n_actions, Eigen::MatrixXd transition,
               Eigen::VectorXd initial_distribution, double discount);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    double discount() const noexcept { return discount_; }

    const Eigen::MatrixXd& transition() const noexcept { return transition_; }
    const Eigen::VectorXd& initial_distribution() const noexcept { return initial_; }

    /// Next-state distribution of (s, a) as a row vector of length S.
    auto row(std::size_t s, std::size_t a) const { return transition_.row(row_index(s, a)); }
    double probability(std::size_t s, std::size_t a, std::size_t next) const {
        return transition_(row_index(s, a), next);
    }

    std::size_t row_index(std::size_t s, std::size_t a) const noexcept { return s * n_actions_ + a; }

    /// Length of a reward tensor over (s, a, s') triples.
    std::size_t reward_size() const noexcept { return n_states_ * n_actions_ * n_states_; }
    std::size_t reward_index(std::size_t s, std::size_t a, std::size_t next) const noexcept {
        return (s * n_actions_ + a) * n_states_ + next;
    }

    TabularMdp with_discount(double discount) const;
    TabularMdp with_transition(Eigen::MatrixXd transition) const;

    /// True when some state has two actions with different next-state distributions.
    bool has_nontrivial_transitions(double tol = kProbabilityTolerance) const;

    bool operator==(const TabularMdp& other) const;

  private:
    std::size_t n_states_;
    std::size_t n_actions_;
    Eigen::MatrixXd transition_;
    Eigen::VectorXd initial_;
    double discount_;
};

/// A real-valued reward over (s, a, s') triples, stored flat in TabularMdp::reward_index order.
class RewardFunction {
  public:
    RewardFunction(std::size_t n_states, std::size_t n_actions, Eigen::VectorXd values);

    static RewardFunction zeros(std::size_t n_states, std::size_t n_actions);
    static RewardFunction constant(std::size_t n_states, std::size_t n_actions, double value);
    /// Reward that depends only on (s, a): `table(s, a)` for every successor.
    static RewardFunction from_state_action(const Eigen::MatrixXd& table);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

    const Eigen::VectorXd& values() const noexcept { return values_; }

    double operator()(std::size_t s, std::size_t a, std::size_t next) const {
        return values_[static_cast<Eigen::Index>(index(s, a, next))];
    }
    double& operator()(std::size_t s, std::size_t a, std::size_t next) {
        return values_[static_cast<Eigen::Index>(index(s, a, next))];
    }

    double norm() const { return values_.norm(); }
    double max_abs() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

    bool same_shape(const RewardFunction& other) const noexcept {
        return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
    }
    /// Throws ValidationError unless the reward is defined on the MDP's state and action sets.
    void check_shape(const TabularMdp& mdp) const;

    RewardFunction operator+(const RewardFunction& other) const;
    RewardFunction operator-(const RewardFunction& other) const;
    RewardFunction operator-() const;
    RewardFunction operator*(double c) const;
    friend RewardFunction operator*(double c, const RewardFunction& r) { return r * c; }

    bool operator==(const RewardFunction& other) const;

  private:
    std::size_t index(std::size_t s, std::size_t a, std::size_t next) const noexcept {
        return (s * n_actions_ + a) * n_states_ + next;
    }

    std::size_t n_states_;
    std::size_t n_actions_;
    Eigen::VectorXd values_;
};

/// Stochastic policy: row s is the action distribution in state s.
class Policy {
  public:
    explicit Policy(Eigen::MatrixXd probs);

    static Policy uniform(std::size_t n_states, std::size_t n_actions);
    static Policy deterministic(const std::vector<std::size_t>& actions, std::size_t n_actions);

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t n_actions() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
    const Eigen::MatrixXd& probs() const noexcept { return probs_; }
    double operator()(std::size_t s, std::size_t a) const {
        return probs_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    }

    void check_shape(const TabularMdp& mdp) const;

    bool operator==(const Policy& other) const { return probs_ == other.probs_; }

  private:
    Eigen::MatrixXd probs_;
};

struct ValueTable {
    Eigen::VectorXd values;
    /// Sup-norm Bellman residual of `values` for the operator it was solved against.
    double residual = 0.0;
};

struct QTable {
    Eigen::MatrixXd values;  // S x A
};

struct OptimalValues {
    ValueTable v;
    QTable q;
    std::size_t iterations = 0;
};

/// Discounted expected visitation of each (s, a, s') triple, starting from the initial distribution.
struct OccupancyMeasure {
    Eigen::VectorXd triples;  // reward_index order
    Eigen::VectorXd states;   // discounted state visitation

    double total_mass() const { return triples.sum(); }
    double dot(const RewardFunction& r) const { return triples.dot(r.values()); }
};

struct SolverOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 100000;
};

/// E_{S'~tau(s,a)}[R(s,a,S')] as an S x A table.
Eigen::MatrixXd expected_reward(const TabularMdp& mdp, const RewardFunction& reward);

/// Q(s,a) = E[R(s,a,S') + gamma V(S')].
Eigen::MatrixXd q_from_values(const TabularMdp& mdp, const Eigen::MatrixXd& mean_reward,
                              const Eigen::VectorXd& values);

/// State-to-state transition matrix under `policy`.
Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy);

/// V^pi by a direct linear solve of (I - gamma P_pi) V = r_pi.
ValueTable policy_evaluation(const TabularMdp& mdp, const RewardFunction& reward, const Policy& policy,
                             const SolverOptions& options = {});

/// V* and Q* by value iteration to the sup-norm tolerance, then polished by exact
/// evaluation of the greedy policy when that lowers the Bellman residual.
OptimalValues optimal_values(const TabularMdp& mdp, const RewardFunction& reward,
                             const SolverOptions& options = {});

/// J(pi) = <mu0, V^pi>.
double policy_return(const TabularMdp& mdp, const RewardFunction& reward, const Policy& policy);

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy);

/// Seeded instance with Dirichlet(concentration) transition rows and initial distribution.
/// Redraws (deterministically) until every state is reachable.
TabularMdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                      double concentration, double discount = 0.9);

/// Seeded reward with i.i.d. N(0, scale^2) entries.
RewardFunction random_reward(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                             double scale = 1.0);

/// Seeded policy whose rows are Dirichlet(1) draws.
Policy random_policy(std::uint64_t seed, std::size_t n_states, std::size_t n_actions);

}  // namespace starclab
