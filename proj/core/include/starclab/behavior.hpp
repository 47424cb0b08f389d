#pragma once

#include "starclab/mdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace starclab {

/// Uniform over {a : Q*(s,a) >= max_a Q*(s,a) - kappa}; kappa defaults to 1e-8 * (1 + ||Q*||_inf).
Policy optimal_policy_uniform(const TabularMdp& mdp, const RewardFunction& reward,
                              std::optional<double> kappa = std::nullopt, const SolverOptions& options = {});

/// Per-state softmax of beta * Q*.
Policy boltzmann_policy(const TabularMdp& mdp, const RewardFunction& reward, double beta,
                        const SolverOptions& options = {});

struct SoftValues {
    Eigen::VectorXd v;
    Eigen::MatrixXd q;
    Policy policy;
    /// Sup-norm residual of V = alpha * logsumexp(Q / alpha).
    double residual;
    std::size_t iterations;
};

/// Soft value iteration followed by soft policy-iteration refinement.
SoftValues soft_values(const TabularMdp& mdp, const RewardFunction& reward, double alpha,
                       const SolverOptions& options = {});

/// Maximal-causal-entropy policy pi(a|s) = exp((Q(s,a) - V(s)) / alpha).
Policy mce_policy(const TabularMdp& mdp, const RewardFunction& reward, double alpha,
                  const SolverOptions& options = {});

enum class ModelKind { optimal_uniform, boltzmann, mce };

const char* to_string(ModelKind kind);
/// Inverse of to_string; ValidationError for unknown names.
ModelKind model_kind_from_string(const std::string& name);

/// A behavioural model: a map from rewards to policies in a fixed environment.
struct BehavioralModelSpec {
    ModelKind kind;
    /// beta for boltzmann, alpha for mce, unused for optimal_uniform.
    double parameter;
    /// Argmax tolerance of optimal_uniform; the default when empty.
    std::optional<double> kappa;
    TabularMdp environment;
    SolverOptions solver;

    static BehavioralModelSpec optimal(TabularMdp environment, std::optional<double> kappa = std::nullopt);
    static BehavioralModelSpec boltzmann(TabularMdp environment, double beta);
    static BehavioralModelSpec mce(TabularMdp environment, double alpha);

    /// Throws ValidationError unless the parameter is strictly positive (kappa non-negative).
    void validate() const;
    bool continuous() const noexcept { return kind != ModelKind::optimal_uniform; }
    Policy apply(const RewardFunction& reward) const;
    BehavioralModelSpec with_environment(TabularMdp environment) const;
};

struct NamedReward {
    std::string id;
    RewardFunction reward;
};

struct ModelTable {
    std::vector<std::string> ids;
    std::vector<Policy> policies;

    std::size_t size() const noexcept { return ids.size(); }
};

/// Applies the model to each hypothesis in order. Solver failures are rethrown with the reward id.
ModelTable materialize_model(const BehavioralModelSpec& spec, const std::vector<NamedReward>& hypotheses);

double linf_distance(const Policy& p1, const Policy& p2);
/// Frobenius norm of the difference of the probability tables.
double l2_distance(const Policy& p1, const Policy& p2);

}  // namespace starclab
