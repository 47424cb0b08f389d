#include "starclab/behavior.hpp"

#include "starclab/errors.hpp"

#include <cmath>
#include <string>

namespace starclab {

namespace {

void check_positive(double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw ValidationError(std::string(name) + " must be a finite positive number, got " + std::to_string(x));
    }
}

// Row-wise softmax of `logits` with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index s = 0; s < logits.rows(); ++s) {
        const double m = logits.row(s).maxCoeff();
        out.row(s) = (logits.row(s).array() - m).exp().matrix();
        out.row(s) /= out.row(s).sum();
    }
    return out;
}

// alpha * log sum_a exp(q(s,a) / alpha), stabilized.
Eigen::VectorXd soft_max_rows(const Eigen::MatrixXd& q, double alpha) {
    Eigen::VectorXd out(q.rows());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        const double m = q.row(s).maxCoeff();
        out[s] = m + alpha * std::log((((q.row(s).array() - m) / alpha).exp()).sum());
    }
    return out;
}

Eigen::MatrixXd soft_policy_table(const Eigen::MatrixXd& q, double alpha) { return softmax_rows(q / alpha); }

}  // namespace

Policy optimal_policy_uniform(const TabularMdp& mdp, const RewardFunction& reward, std::optional<double> kappa,
                              const SolverOptions& options) {
    const OptimalValues opt = optimal_values(mdp, reward, options);
    const Eigen::MatrixXd& q = opt.q.values;
    const double tol = kappa.value_or(1e-8 * (1.0 + q.cwiseAbs().maxCoeff()));
    if (!(tol >= 0.0)) throw ValidationError("argmax tolerance must be non-negative");
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        const double best = q.row(s).maxCoeff();
        for (Eigen::Index a = 0; a < q.cols(); ++a) {
            if (q(s, a) >= best - tol) probs(s, a) = 1.0;
        }
        probs.row(s) /= probs.row(s).sum();
    }
    return Policy(std::move(probs));
}

Policy boltzmann_policy(const TabularMdp& mdp, const RewardFunction& reward, double beta,
                        const SolverOptions& options) {
    check_positive(beta, "beta");
    const OptimalValues opt = optimal_values(mdp, reward, options);
    return Policy(softmax_rows(beta * opt.q.values));
}

SoftValues soft_values(const TabularMdp& mdp, const RewardFunction& reward, double alpha,
                       const SolverOptions& options) {
    check_positive(alpha, "alpha");
    reward.check_shape(mdp);
    const Eigen::MatrixXd mean = expected_reward(mdp, reward);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());

    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Eigen::MatrixXd q = q_from_values(mdp, mean, v);
    double diff = 0.0;
    std::size_t it = 0;
    for (; it < options.max_iterations; ++it) {
        const Eigen::VectorXd next = soft_max_rows(q, alpha);
        diff = (next - v).cwiseAbs().maxCoeff();
        v = next;
        q = q_from_values(mdp, mean, v);
        if (diff < options.tolerance) break;
    }
    if (it == options.max_iterations) throw ConvergenceError("soft value iteration did not converge", diff);

    double residual = (soft_max_rows(q, alpha) - v).cwiseAbs().maxCoeff();
    // Soft policy iteration: V^pi solves (I - gamma P_pi) V = r_pi + alpha H(pi), and the
    // soft-greedy update is a Newton step on the soft Bellman equation.
    for (int polish = 0; polish < 8 && residual > 0.0; ++polish) {
        const Policy pi(soft_policy_table(q, alpha));
        const Eigen::MatrixXd& probs = pi.probs();
        Eigen::VectorXd r = (mean.cwiseProduct(probs)).rowwise().sum();
        for (Eigen::Index s = 0; s < S; ++s) {
            double entropy = 0.0;
            for (Eigen::Index a = 0; a < probs.cols(); ++a) {
                if (probs(s, a) > 0.0) entropy -= probs(s, a) * std::log(probs(s, a));
            }
            r[s] += alpha * entropy;
        }
        const Eigen::MatrixXd p = state_transition_matrix(mdp, pi);
        const Eigen::VectorXd candidate =
            Eigen::PartialPivLU<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(S, S) - mdp.discount() * p).solve(r);
        const Eigen::MatrixXd candidate_q = q_from_values(mdp, mean, candidate);
        const double candidate_residual = (soft_max_rows(candidate_q, alpha) - candidate).cwiseAbs().maxCoeff();
        if (!(candidate_residual < residual)) break;
        v = candidate;
        q = candidate_q;
        residual = candidate_residual;
    }
    if (!(residual < options.tolerance * std::max(1.0, v.cwiseAbs().maxCoeff()))) {
        throw ConvergenceError("soft value iteration stalled above tolerance", residual);
    }
    Policy policy(soft_policy_table(q, alpha));
    return {std::move(v), std::move(q), std::move(policy), residual, it + 1};
}

Policy mce_policy(const TabularMdp& mdp, const RewardFunction& reward, double alpha, const SolverOptions& options) {
    return soft_values(mdp, reward, alpha, options).policy;
}

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::optimal_uniform: return "optimal";
        case ModelKind::boltzmann: return "boltzmann";
        case ModelKind::mce: return "mce";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "optimal" || name == "optimal_uniform") return ModelKind::optimal_uniform;
    if (name == "boltzmann") return ModelKind::boltzmann;
    if (name == "mce") return ModelKind::mce;
    throw ValidationError("unknown model kind '" + name + "' (expected optimal, boltzmann or mce)");
}

BehavioralModelSpec BehavioralModelSpec::optimal(TabularMdp environment, std::optional<double> kappa) {
    BehavioralModelSpec spec{ModelKind::optimal_uniform, 0.0, kappa, std::move(environment), {}};
    spec.validate();
    return spec;
}

BehavioralModelSpec BehavioralModelSpec::boltzmann(TabularMdp environment, double beta) {
    BehavioralModelSpec spec{ModelKind::boltzmann, beta, std::nullopt, std::move(environment), {}};
    spec.validate();
    return spec;
}

BehavioralModelSpec BehavioralModelSpec::mce(TabularMdp environment, double alpha) {
    BehavioralModelSpec spec{ModelKind::mce, alpha, std::nullopt, std::move(environment), {}};
    spec.validate();
    return spec;
}

void BehavioralModelSpec::validate() const {
    switch (kind) {
        case ModelKind::optimal_uniform:
            if (kappa && !(*kappa >= 0.0)) throw ValidationError("kappa must be non-negative");
            break;
        case ModelKind::boltzmann: check_positive(parameter, "beta"); break;
        case ModelKind::mce: check_positive(parameter, "alpha"); break;
    }
}

Policy BehavioralModelSpec::apply(const RewardFunction& reward) const {
    switch (kind) {
        case ModelKind::optimal_uniform: return optimal_policy_uniform(environment, reward, kappa, solver);
        case ModelKind::boltzmann: return boltzmann_policy(environment, reward, parameter, solver);
        case ModelKind::mce: return mce_policy(environment, reward, parameter, solver);
    }
    throw InternalError("unhandled model kind");
}

BehavioralModelSpec BehavioralModelSpec::with_environment(TabularMdp env) const {
    BehavioralModelSpec out = *this;
    out.environment = std::move(env);
    return out;
}

ModelTable materialize_model(const BehavioralModelSpec& spec, const std::vector<NamedReward>& hypotheses) {
    if (hypotheses.empty()) throw ValidationError("hypothesis set is empty");
    spec.validate();
    ModelTable table;
    table.ids.reserve(hypotheses.size());
    table.policies.reserve(hypotheses.size());
    for (const auto& h : hypotheses) {
        try {
            table.policies.push_back(spec.apply(h.reward));
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("reward '" + h.id + "': " + e.what(), e.residual());
        } catch (const ValidationError& e) {
            throw ValidationError("reward '" + h.id + "': " + e.what());
        } catch (const Error& e) {
            throw Error("reward '" + h.id + "': " + e.what());
        }
        table.ids.push_back(h.id);
    }
    return table;
}

double linf_distance(const Policy& p1, const Policy& p2) {
    if (p1.n_states() != p2.n_states() || p1.n_actions() != p2.n_actions()) {
        throw ValidationError("policies have different shapes");
    }
    return (p1.probs() - p2.probs()).cwiseAbs().maxCoeff();
}

double l2_distance(const Policy& p1, const Policy& p2) {
    if (p1.n_states() != p2.n_states() || p1.n_actions() != p2.n_actions()) {
        throw ValidationError("policies have different shapes");
    }
    return (p1.probs() - p2.probs()).norm();
}

}  // namespace starclab
