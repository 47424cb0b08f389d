#include "starclab/mdp.hpp"

#include "sampling.hpp"
#include "starclab/errors.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <string>

namespace starclab {

namespace {

std::string fmt_pair(std::size_t s, std::size_t a) {
    std::ostringstream out;
    out << "(s=" << s << ", a=" << a << ")";
    return out.str();
}

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& p, const std::string& what) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i])) throw ValidationError(what + " has a non-finite entry");
        if (p[i] < 0.0) {
            throw ValidationError(what + " has a negative entry at index " + std::to_string(i));
        }
    }
    const double total = p.sum();
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
        std::ostringstream out;
        out.precision(17);
        out << what << " sums to " << total << ", expected 1";
        throw ValidationError(out.str());
    }
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, Eigen::MatrixXd transition,
                       Eigen::VectorXd initial_distribution, double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      initial_(std::move(initial_distribution)),
      discount_(discount) {
    if (n_states_ == 0) throw ValidationError("n_states must be positive");
    if (n_actions_ == 0) throw ValidationError("n_actions must be positive");
    if (!(discount_ > 0.0 && discount_ < 1.0)) {
        throw ValidationError("discount must lie in (0, 1), got " + std::to_string(discount_));
    }
    const auto rows = static_cast<Eigen::Index>(n_states_ * n_actions_);
    const auto cols = static_cast<Eigen::Index>(n_states_);
    if (transition_.rows() != rows || transition_.cols() != cols) {
        throw ValidationError("transition must have shape [n_states][n_actions][n_states]");
    }
    if (initial_.size() != cols) throw ValidationError("mu0 must have n_states entries");

    for (std::size_t s = 0; s < n_states_; ++s) {
        for (std::size_t a = 0; a < n_actions_; ++a) {
            check_distribution(transition_.row(static_cast<Eigen::Index>(row_index(s, a))).transpose(),
                               "transition row " + fmt_pair(s, a));
        }
    }
    check_distribution(initial_, "mu0");

    // Breadth-first search over positive-probability edges from the support of mu0.
    std::vector<bool> seen(n_states_, false);
    std::deque<std::size_t> frontier;
    for (std::size_t s = 0; s < n_states_; ++s) {
        if (initial_[static_cast<Eigen::Index>(s)] > 0.0) {
            seen[s] = true;
            frontier.push_back(s);
        }
    }
    while (!frontier.empty()) {
        const std::size_t s = frontier.front();
        frontier.pop_front();
        for (std::size_t a = 0; a < n_actions_; ++a) {
            for (std::size_t next = 0; next < n_states_; ++next) {
                if (!seen[next] && probability(s, a, next) > 0.0) {
                    seen[next] = true;
                    frontier.push_back(next);
                }
            }
        }
    }
    for (std::size_t s = 0; s < n_states_; ++s) {
        if (!seen[s]) throw ValidationError("state " + std::to_string(s) + " is unreachable from mu0");
    }
}

TabularMdp TabularMdp::with_discount(double discount) const {
    return TabularMdp(n_states_, n_actions_, transition_, initial_, discount);
}

TabularMdp TabularMdp::with_transition(Eigen::MatrixXd transition) const {
    return TabularMdp(n_states_, n_actions_, std::move(transition), initial_, discount_);
}

bool TabularMdp::has_nontrivial_transitions(double tol) const {
    for (std::size_t s = 0; s < n_states_; ++s) {
        for (std::size_t a = 1; a < n_actions_; ++a) {
            if ((row(s, a) - row(s, 0)).cwiseAbs().maxCoeff() > tol) return true;
        }
    }
    return false;
}

bool TabularMdp::operator==(const TabularMdp& other) const {
    return n_states_ == other.n_states_ && n_actions_ == other.n_actions_ &&
           discount_ == other.discount_ && transition_ == other.transition_ && initial_ == other.initial_;
}

RewardFunction::RewardFunction(std::size_t n_states, std::size_t n_actions, Eigen::VectorXd values)
    : n_states_(n_states), n_actions_(n_actions), values_(std::move(values)) {
    if (n_states_ == 0 || n_actions_ == 0) throw ValidationError("reward dimensions must be positive");
    if (values_.size() != static_cast<Eigen::Index>(n_states_ * n_actions_ * n_states_)) {
        throw ValidationError("reward must have shape [n_states][n_actions][n_states]");
    }
    if (!values_.allFinite()) throw ValidationError("reward has a non-finite entry");
}

RewardFunction RewardFunction::zeros(std::size_t n_states, std::size_t n_actions) {
    return constant(n_states, n_actions, 0.0);
}

RewardFunction RewardFunction::constant(std::size_t n_states, std::size_t n_actions, double value) {
    return RewardFunction(n_states, n_actions,
                          Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_states * n_actions * n_states), value));
}

RewardFunction RewardFunction::from_state_action(const Eigen::MatrixXd& table) {
    const auto n_states = static_cast<std::size_t>(table.rows());
    const auto n_actions = static_cast<std::size_t>(table.cols());
    RewardFunction r = zeros(n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a)
            for (std::size_t next = 0; next < n_states; ++next)
                r(s, a, next) = table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    return r;
}

void RewardFunction::check_shape(const TabularMdp& mdp) const {
    if (n_states_ != mdp.n_states() || n_actions_ != mdp.n_actions()) {
        throw ValidationError("reward shape does not match the MDP");
    }
}

RewardFunction RewardFunction::operator+(const RewardFunction& other) const {
    if (!same_shape(other)) throw ValidationError("reward shape mismatch");
    return RewardFunction(n_states_, n_actions_, values_ + other.values_);
}

RewardFunction RewardFunction::operator-(const RewardFunction& other) const {
    if (!same_shape(other)) throw ValidationError("reward shape mismatch");
    return RewardFunction(n_states_, n_actions_, values_ - other.values_);
}

RewardFunction RewardFunction::operator-() const { return RewardFunction(n_states_, n_actions_, -values_); }

RewardFunction RewardFunction::operator*(double c) const {
    return RewardFunction(n_states_, n_actions_, values_ * c);
}

bool RewardFunction::operator==(const RewardFunction& other) const {
    return same_shape(other) && values_ == other.values_;
}

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw ValidationError("policy must be non-empty");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        check_distribution(probs_.row(s).transpose(), "policy row " + std::to_string(s));
    }
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
    return Policy(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_states),
                                            static_cast<Eigen::Index>(n_actions), 1.0 / static_cast<double>(n_actions)));
}

Policy Policy::deterministic(const std::vector<std::size_t>& actions, std::size_t n_actions) {
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()),
                                                  static_cast<Eigen::Index>(n_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions) throw ValidationError("action index out of range");
        probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    }
    return Policy(std::move(probs));
}

void Policy::check_shape(const TabularMdp& mdp) const {
    if (n_states() != mdp.n_states() || n_actions() != mdp.n_actions()) {
        throw ValidationError("policy shape does not match the MDP");
    }
}

Eigen::MatrixXd expected_reward(const TabularMdp& mdp, const RewardFunction& reward) {
    reward.check_shape(mdp);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    Eigen::MatrixXd mean(S, A);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index a = 0; a < A; ++a) {
            const Eigen::Index row = s * A + a;
            mean(s, a) = mdp.transition().row(row).dot(reward.values().segment(row * S, S));
        }
    }
    return mean;
}

Eigen::MatrixXd q_from_values(const TabularMdp& mdp, const Eigen::MatrixXd& mean_reward,
                              const Eigen::VectorXd& values) {
    const Eigen::VectorXd next = mdp.transition() * values;  // (S*A) expected next value
    const auto S = mean_reward.rows();
    const auto A = mean_reward.cols();
    Eigen::MatrixXd q(S, A);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a) q(s, a) = mean_reward(s, a) + mdp.discount() * next[s * A + a];
    return q;
}

Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
    policy.check_shape(mdp);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(S, S);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index a = 0; a < A; ++a) p.row(s) += policy.probs()(s, a) * mdp.transition().row(s * A + a);
    return p;
}

namespace {

double evaluation_residual(const TabularMdp& mdp, const Eigen::MatrixXd& p, const Eigen::VectorXd& r,
                           const Eigen::VectorXd& v) {
    return (r + mdp.discount() * p * v - v).cwiseAbs().maxCoeff();
}

}  // namespace

ValueTable policy_evaluation(const TabularMdp& mdp, const RewardFunction& reward, const Policy& policy,
                             const SolverOptions& options) {
    reward.check_shape(mdp);
    policy.check_shape(mdp);
    const Eigen::MatrixXd p = state_transition_matrix(mdp, policy);
    const Eigen::VectorXd r = (expected_reward(mdp, reward).cwiseProduct(policy.probs())).rowwise().sum();
    const auto S = p.rows();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.discount() * p;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);

    ValueTable out;
    out.values = lu.solve(r);
    out.residual = evaluation_residual(mdp, p, r, out.values);
    // One step of iterative refinement absorbs the LU rounding on badly scaled inputs.
    const double scale = std::max(1.0, out.values.cwiseAbs().maxCoeff());
    if (out.residual >= options.tolerance * scale) {
        out.values += lu.solve(r - system * out.values);
        out.residual = evaluation_residual(mdp, p, r, out.values);
    }
    if (!std::isfinite(out.residual) || out.residual >= options.tolerance * scale) {
        throw InternalError("policy evaluation residual " + std::to_string(out.residual) +
                            " exceeds tolerance");
    }
    return out;
}

namespace {

Eigen::VectorXd row_max(const Eigen::MatrixXd& q) { return q.rowwise().maxCoeff(); }

Policy greedy_policy(const Eigen::MatrixXd& q) {
    std::vector<std::size_t> actions(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        q.row(s).maxCoeff(&best);
        actions[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
    }
    return Policy::deterministic(actions, static_cast<std::size_t>(q.cols()));
}

}  // namespace

OptimalValues optimal_values(const TabularMdp& mdp, const RewardFunction& reward, const SolverOptions& options) {
    reward.check_shape(mdp);
    const Eigen::MatrixXd mean = expected_reward(mdp, reward);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());

    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Eigen::MatrixXd q = q_from_values(mdp, mean, v);
    double diff = 0.0;
    std::size_t it = 0;
    for (; it < options.max_iterations; ++it) {
        const Eigen::VectorXd next = row_max(q);
        diff = (next - v).cwiseAbs().maxCoeff();
        v = next;
        q = q_from_values(mdp, mean, v);
        if (diff < options.tolerance) break;
    }
    if (it == options.max_iterations) throw ConvergenceError("value iteration did not converge", diff);

    double residual = (row_max(q) - v).cwiseAbs().maxCoeff();
    // Policy-iteration polish: exact evaluation of the greedy policy is the fixed point
    // whenever that policy is optimal, so keep it if it lowers the residual.
    for (int polish = 0; polish < 4 && residual > 0.0; ++polish) {
        const Policy greedy = greedy_policy(q);
        const Eigen::MatrixXd p = state_transition_matrix(mdp, greedy);
        const Eigen::VectorXd r = (mean.cwiseProduct(greedy.probs())).rowwise().sum();
        const Eigen::VectorXd candidate =
            Eigen::PartialPivLU<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(S, S) - mdp.discount() * p).solve(r);
        const Eigen::MatrixXd candidate_q = q_from_values(mdp, mean, candidate);
        const double candidate_residual = (row_max(candidate_q) - candidate).cwiseAbs().maxCoeff();
        if (!(candidate_residual < residual)) break;
        v = candidate;
        q = candidate_q;
        residual = candidate_residual;
    }

    OptimalValues out;
    out.v.values = std::move(v);
    out.v.residual = residual;
    out.q.values = std::move(q);
    out.iterations = it + 1;
    return out;
}

double policy_return(const TabularMdp& mdp, const RewardFunction& reward, const Policy& policy) {
    return mdp.initial_distribution().dot(policy_evaluation(mdp, reward, policy).values);
}

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy) {
    policy.check_shape(mdp);
    const Eigen::MatrixXd p = state_transition_matrix(mdp, policy);
    const auto S = p.rows();
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.discount() * p.transpose();

    OccupancyMeasure out;
    out.states = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(mdp.initial_distribution());
    out.triples.resize(static_cast<Eigen::Index>(mdp.reward_size()));
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index a = 0; a < A; ++a) {
            const Eigen::Index row = s * A + a;
            out.triples.segment(row * S, S) =
                (out.states[s] * policy.probs()(s, a)) * mdp.transition().row(row).transpose();
        }
    }
    return out;
}

TabularMdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions, double concentration,
                      double discount) {
    if (n_states == 0 || n_actions == 0) throw ValidationError("random_mdp: sizes must be positive");
    if (!(concentration > 0.0)) throw ValidationError("random_mdp: concentration must be positive");
    auto rng = detail::make_rng(seed, 0x6d6470);
    const auto S = static_cast<Eigen::Index>(n_states);
    const auto rows = static_cast<Eigen::Index>(n_states * n_actions);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::MatrixXd transition(rows, S);
        for (Eigen::Index row = 0; row < rows; ++row) transition.row(row) = detail::dirichlet(rng, S, concentration);
        Eigen::VectorXd mu0 = detail::dirichlet(rng, S, concentration);
        try {
            return TabularMdp(n_states, n_actions, std::move(transition), std::move(mu0), discount);
        } catch (const ValidationError&) {
            // Unreachable states at low concentration: draw again from the same stream.
        }
    }
    throw ValidationError("random_mdp: could not draw a fully reachable instance");
}

RewardFunction random_reward(std::uint64_t seed, std::size_t n_states, std::size_t n_actions, double scale) {
    if (n_states == 0 || n_actions == 0) throw ValidationError("random_reward: sizes must be positive");
    auto rng = detail::make_rng(seed, 0x726577);
    const auto n = static_cast<Eigen::Index>(n_states * n_actions * n_states);
    return RewardFunction(n_states, n_actions, scale * detail::standard_normal(rng, n));
}

Policy random_policy(std::uint64_t seed, std::size_t n_states, std::size_t n_actions) {
    auto rng = detail::make_rng(seed, 0x706f6c);
    Eigen::MatrixXd probs(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions));
    for (Eigen::Index s = 0; s < probs.rows(); ++s) {
        probs.row(s) = detail::dirichlet(rng, probs.cols(), 1.0).transpose();
    }
    return Policy(std::move(probs));
}

}  // namespace starclab
