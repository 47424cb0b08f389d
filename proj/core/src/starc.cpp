#include "starclab/starc.hpp"

#include "starclab/oracles.hpp"

namespace starclab {

StarcMetric::StarcMetric(const TabularMdp& mdp)
    : mdp_(mdp),
      projector_(std::make_shared<const InvarianceProjector>(mdp)),
      zero_tol_(1e-10 * static_cast<double>(mdp.reward_size())) {}

CanonicalReward StarcMetric::canonicalize(const RewardFunction& reward) const {
    const Eigen::VectorXd coords = projector_->canonical_coordinates(reward);
    return {projector_->embed(coords), coords.norm()};
}

Eigen::VectorXd StarcMetric::standardized_coordinates(const RewardFunction& reward) const {
    Eigen::VectorXd coords = projector_->canonical_coordinates(reward);
    const double norm = coords.norm();
    if (norm > zero_tol_) return coords / norm;
    return Eigen::VectorXd::Zero(coords.size());
}

StandardizedReward StarcMetric::standardize(const RewardFunction& reward) const {
    const Eigen::VectorXd coords = projector_->canonical_coordinates(reward);
    const double norm = coords.norm();
    if (norm > zero_tol_) return {projector_->embed(coords / norm), false};
    return {RewardFunction::zeros(reward.n_states(), reward.n_actions()), true};
}

MetricReport StarcMetric::distance(const RewardFunction& r1, const RewardFunction& r2) const {
    const Eigen::VectorXd c1 = projector_->canonical_coordinates(r1);
    const Eigen::VectorXd c2 = projector_->canonical_coordinates(r2);
    const double n1 = c1.norm();
    const double n2 = c2.norm();
    const Eigen::VectorXd u1 = n1 > zero_tol_ ? Eigen::VectorXd(c1 / n1) : Eigen::VectorXd::Zero(c1.size());
    const Eigen::VectorXd u2 = n2 > zero_tol_ ? Eigen::VectorXd(c2 / n2) : Eigen::VectorXd::Zero(c2.size());
    return {distance_between(u1, u2), n1, n2, u1.dot(u2)};
}

CanonicalReward canonicalize(const TabularMdp& mdp, const RewardFunction& reward) {
    return StarcMetric(mdp).canonicalize(reward);
}

StandardizedReward standardize(const TabularMdp& mdp, const RewardFunction& reward) {
    return StarcMetric(mdp).standardize(reward);
}

MetricReport starc_distance(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2) {
    return StarcMetric(mdp).distance(r1, r2);
}

RegretGap regret_gap(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2, std::size_t cap) {
    auto witness = regret_witness_search(mdp, r1, r2, cap);
    if (witness.trivial) return {0.0, std::nullopt};
    return {witness.normalized_regret, std::make_pair(std::move(witness.pi1), std::move(witness.pi2))};
}

}  // namespace starclab
