#include "starclab/transforms.hpp"

#include "sampling.hpp"
#include "starclab/errors.hpp"

#include <cmath>
#include <string>

namespace starclab {

namespace {

constexpr double kRedistributionTolerance = 1e-9;
constexpr double kSubspaceTolerance = 1e-8;
constexpr double kNontrivialThreshold = 1e-6;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

PotentialFunction PotentialFunction::indicator(std::size_t n_states, std::size_t state, double scale) {
    PotentialFunction p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states))};
    p.phi[static_cast<Eigen::Index>(state)] = scale;
    return p;
}

RewardFunction shaping_reward(std::size_t n_states, std::size_t n_actions, const PotentialFunction& potential,
                              double discount) {
    if (potential.phi.size() != static_cast<Eigen::Index>(n_states)) {
        throw ValidationError("potential must have one entry per state");
    }
    if (!potential.phi.allFinite()) throw ValidationError("potential has a non-finite entry");
    RewardFunction r = RewardFunction::zeros(n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a)
            for (std::size_t next = 0; next < n_states; ++next)
                r(s, a, next) = discount * potential.phi[static_cast<Eigen::Index>(next)] -
                                potential.phi[static_cast<Eigen::Index>(s)];
    return r;
}

RewardFunction apply_potential_shaping(const RewardFunction& reward, const PotentialFunction& potential,
                                       double discount) {
    return reward + shaping_reward(reward.n_states(), reward.n_actions(), potential, discount);
}

double max_conditional_mean(const TabularMdp& mdp, const RewardFunction& delta) {
    return expected_reward(mdp, delta).cwiseAbs().maxCoeff();
}

RewardFunction apply_redistribution_noise(const RewardFunction& reward, const TabularMdp& mdp, std::uint64_t seed,
                                          double magnitude) {
    reward.check_shape(mdp);
    if (!(magnitude >= 0.0)) throw ValidationError("redistribution magnitude must be non-negative");
    if (magnitude == 0.0) return reward;

    auto rng = detail::make_rng(seed, 0x726564);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    Eigen::VectorXd noise = detail::standard_normal(rng, static_cast<Eigen::Index>(mdp.reward_size()));
    for (Eigen::Index row = 0; row < mdp.transition().rows(); ++row) {
        const Eigen::VectorXd t = mdp.transition().row(row).transpose();
        auto block = noise.segment(row * S, S);
        block -= (block.dot(t) / t.squaredNorm()) * t;
    }
    const double norm = noise.norm();
    if (norm < 1e-12) return reward;
    return reward + RewardFunction(reward.n_states(), reward.n_actions(), noise * (magnitude / norm));
}

const char* step_kind(const TransformStep& s) {
    return std::visit(overloaded{[](const step::Shaping&) { return "shaping"; },
                                 [](const step::Redistribution&) { return "redistribution"; },
                                 [](const step::Scale&) { return "scale"; },
                                 [](const step::Nudge&) { return "nudge"; }},
                      s);
}

void validate_chain(const TabularMdp& mdp, const TransformChain& chain) {
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const std::string where = "chain step " + std::to_string(i) + ": ";
        std::visit(overloaded{[&](const step::Shaping& s) {
                                  if (s.potential.phi.size() != static_cast<Eigen::Index>(mdp.n_states()))
                                      throw ValidationError(where + "potential has wrong length");
                              },
                              [&](const step::Redistribution& s) {
                                  s.delta.check_shape(mdp);
                                  const double gap = max_conditional_mean(mdp, s.delta);
                                  if (gap > kRedistributionTolerance)
                                      throw ValidationError(where + "redistribution has conditional mean " +
                                                            std::to_string(gap));
                              },
                              [&](const step::Scale& s) {
                                  if (!(s.c > 0.0) || !std::isfinite(s.c))
                                      throw ValidationError(where + "scale factor must be positive");
                              },
                              [&](const step::Nudge& s) { s.delta.check_shape(mdp); }},
                   chain[i]);
    }
}

RewardFunction apply_step(const TabularMdp& mdp, const TransformStep& s, const RewardFunction& reward) {
    return std::visit(
        overloaded{[&](const step::Shaping& x) { return apply_potential_shaping(reward, x.potential, mdp.discount()); },
                   [&](const step::Redistribution& x) { return reward + x.delta; },
                   [&](const step::Scale& x) { return reward * x.c; },
                   [&](const step::Nudge& x) { return reward + x.delta; }},
        s);
}

RewardFunction apply_chain(const TabularMdp& mdp, const TransformChain& chain, const RewardFunction& reward) {
    RewardFunction out = reward;
    for (const auto& s : chain) out = apply_step(mdp, s, out);
    return out;
}

InvarianceBasis invariance_basis(const TabularMdp& mdp) {
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    const auto n = static_cast<Eigen::Index>(mdp.reward_size());

    InvarianceBasis basis;
    basis.shaping_dirs.resize(n, S);
    for (Eigen::Index i = 0; i < S; ++i) {
        basis.shaping_dirs.col(i) =
            shaping_reward(mdp.n_states(), mdp.n_actions(), PotentialFunction::indicator(mdp.n_states(),
                                                                                         static_cast<std::size_t>(i)),
                           mdp.discount())
                .values();
    }

    basis.redistribution_dirs = Eigen::MatrixXd::Zero(n, S * A * (S - 1));
    for (Eigen::Index row = 0; row < S * A; ++row) {
        // Columns 1..S-1 of the full Householder Q of the row span its orthogonal complement.
        const Eigen::MatrixXd t = mdp.transition().row(row).transpose();
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(t);
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(S, S);
        basis.redistribution_dirs.block(row * S, row * (S - 1), S, S - 1) = q.rightCols(S - 1);
    }

    const InvarianceProjector projector(mdp);
    const Eigen::MatrixXd& shaping_coords = projector.shaping_coordinates();
    Eigen::MatrixXd shaping_embedded(n, shaping_coords.cols());
    for (Eigen::Index j = 0; j < shaping_coords.cols(); ++j) {
        shaping_embedded.col(j) = projector.embed(shaping_coords.col(j)).values();
    }
    basis.combined_orthonormal.resize(n, basis.redistribution_dirs.cols() + shaping_embedded.cols());
    basis.combined_orthonormal << basis.redistribution_dirs, shaping_embedded;
    return basis;
}

InvarianceProjector::InvarianceProjector(const TabularMdp& mdp)
    : n_states_(mdp.n_states()), n_actions_(mdp.n_actions()) {
    const auto S = static_cast<Eigen::Index>(n_states_);
    const auto A = static_cast<Eigen::Index>(n_actions_);
    const double gamma = mdp.discount();

    unit_rows_ = mdp.transition();
    Eigen::VectorXd row_norms = unit_rows_.rowwise().norm();
    for (Eigen::Index row = 0; row < S * A; ++row) unit_rows_.row(row) /= row_norms[row];

    // Shaping direction for indicator potential i, projected onto the unit rows:
    // <gamma*1[s'=i] - 1[s=i], tau(s,a,.)> / ||tau(s,a,.)||.
    Eigen::MatrixXd coords(S * A, S);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index a = 0; a < A; ++a) {
            const Eigen::Index row = s * A + a;
            for (Eigen::Index i = 0; i < S; ++i) {
                const double inner = gamma * mdp.transition()(row, i) - (s == i ? 1.0 : 0.0);
                coords(row, i) = inner / row_norms[row];
            }
        }
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(coords);
    const Eigen::Index rank = qr.rank();
    shaping_basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(S * A, rank);
    canonical_dimension_ = static_cast<std::size_t>(S * A - rank);
}

Eigen::VectorXd InvarianceProjector::canonical_coordinates(const RewardFunction& reward) const {
    if (reward.n_states() != n_states_ || reward.n_actions() != n_actions_) {
        throw ValidationError("reward shape does not match the MDP");
    }
    const auto S = static_cast<Eigen::Index>(n_states_);
    const Eigen::Index rows = unit_rows_.rows();
    Eigen::VectorXd x(rows);
    for (Eigen::Index row = 0; row < rows; ++row) {
        x[row] = unit_rows_.row(row).dot(reward.values().segment(row * S, S));
    }
    return x - shaping_basis_ * (shaping_basis_.transpose() * x);
}

RewardFunction InvarianceProjector::embed(const Eigen::VectorXd& coordinates) const {
    const auto S = static_cast<Eigen::Index>(n_states_);
    Eigen::VectorXd values(unit_rows_.rows() * S);
    for (Eigen::Index row = 0; row < unit_rows_.rows(); ++row) {
        values.segment(row * S, S) = coordinates[row] * unit_rows_.row(row).transpose();
    }
    return RewardFunction(n_states_, n_actions_, std::move(values));
}

const char* to_string(RewardRelation relation) {
    switch (relation) {
        case RewardRelation::identical: return "identical";
        case RewardRelation::shaping_and_redistribution: return "shaping_and_redistribution";
        case RewardRelation::also_positive_scaling: return "also_positive_scaling";
        case RewardRelation::neither: return "neither";
    }
    return "unknown";
}

RewardRelation differ_by(const RewardFunction& r1, const RewardFunction& r2, const TabularMdp& mdp) {
    r1.check_shape(mdp);
    r2.check_shape(mdp);
    const RewardFunction diff = r1 - r2;
    const double diff_norm = diff.norm();
    if (diff_norm <= 1e-12 * std::max({1.0, r1.norm(), r2.norm()})) return RewardRelation::identical;

    const InvarianceProjector projector(mdp);
    if (projector.canonical_coordinates(diff).norm() < kSubspaceTolerance * std::max(1.0, diff_norm)) {
        return RewardRelation::shaping_and_redistribution;
    }
    const Eigen::VectorXd c1 = projector.canonical_coordinates(r1);
    const Eigen::VectorXd c2 = projector.canonical_coordinates(r2);
    const double zero_tol = 1e-10 * static_cast<double>(mdp.reward_size());
    const double n1 = c1.norm();
    const double n2 = c2.norm();
    if (n1 > zero_tol && n2 > zero_tol && (c1 / n1 - c2 / n2).norm() < kSubspaceTolerance) {
        return RewardRelation::also_positive_scaling;
    }
    return RewardRelation::neither;
}

DiscountInvisibleReward invisible_reward_discount(const TabularMdp& mdp, double gamma1, double gamma2,
                                                  std::uint64_t seed) {
    if (!(gamma1 > 0.0 && gamma1 < 1.0 && gamma2 > 0.0 && gamma2 < 1.0)) {
        throw ValidationError("discounts must lie in (0, 1)");
    }
    if (gamma1 == gamma2) throw PreconditionError("theorem precondition violated: gamma1 must differ from gamma2");
    if (!mdp.has_nontrivial_transitions()) {
        throw PreconditionError("theorem precondition violated: transition function is trivial");
    }
    const InvarianceProjector evaluation(mdp.with_discount(gamma2));
    const std::size_t S = mdp.n_states();
    auto rng = detail::make_rng(seed, 0x696e76);

    constexpr std::size_t kAttempts = 100;
    for (std::size_t attempt = 0; attempt < kAttempts; ++attempt) {
        PotentialFunction potential =
            attempt < S ? PotentialFunction::indicator(S, attempt)
                        : PotentialFunction{detail::standard_normal(rng, static_cast<Eigen::Index>(S))};
        RewardFunction reward = shaping_reward(S, mdp.n_actions(), potential, gamma1);
        const double norm = evaluation.canonical_coordinates(reward).norm();
        if (norm > kNontrivialThreshold) return {std::move(reward), std::move(potential), norm};
    }
    throw PreconditionError("no potential yields a reward that is non-trivial under the evaluation discount");
}

TransitionInvisibleReward invisible_reward_transition(const TabularMdp& model_env, const TabularMdp& eval_env) {
    if (model_env.n_states() != eval_env.n_states() || model_env.n_actions() != eval_env.n_actions()) {
        throw ValidationError("transition functions must share state and action sets");
    }
    const auto S = static_cast<Eigen::Index>(model_env.n_states());
    const auto A = static_cast<Eigen::Index>(model_env.n_actions());
    for (Eigen::Index row = 0; row < S * A; ++row) {
        const Eigen::VectorXd t1 = model_env.transition().row(row).transpose();
        const Eigen::VectorXd t2 = eval_env.transition().row(row).transpose();
        if ((t1 - t2).cwiseAbs().maxCoeff() <= kProbabilityTolerance) continue;

        Eigen::MatrixXd constraints(2, S);
        constraints.row(0) = t1.transpose();
        constraints.row(1) = t2.transpose();
        const Eigen::Matrix2d gram = constraints * constraints.transpose();
        const double det = gram.determinant();
        if (std::abs(det) <= 1e-14 * gram.squaredNorm()) {
            throw InternalError("transition rows are parallel; distinct probability rows cannot be");
        }
        const Eigen::Vector2d rhs(0.0, 1.0);
        const Eigen::VectorXd block = constraints.transpose() * gram.inverse() * rhs;

        RewardFunction reward = RewardFunction::zeros(model_env.n_states(), model_env.n_actions());
        Eigen::VectorXd values = reward.values();
        values.segment(row * S, S) = block;
        return {RewardFunction(model_env.n_states(), model_env.n_actions(), std::move(values)),
                static_cast<std::size_t>(row / A), static_cast<std::size_t>(row % A)};
    }
    throw PreconditionError("theorem precondition violated: transition functions are identical");
}

}  // namespace starclab
