#pragma once

#include "starclab/mdp.hpp"
#include "starclab/transforms.hpp"

#include <memory>
#include <optional>
#include <utility>

namespace starclab {

struct CanonicalReward {
    RewardFunction canonical;
    double norm;
};

struct StandardizedReward {
    RewardFunction unit;
    /// True when the canonical norm fell below the zero tolerance and `unit` is the zero tensor.
    bool is_zero;
};

struct MetricReport {
    double distance;
    double canonical_norm_1;
    double canonical_norm_2;
    /// <unit1, unit2>; zero when either standardized reward is zero.
    double cosine;
};

/**
 * STARC pseudometric for one environment.
 *
 * Canonicalization is the orthogonal projection onto the complement of the
 * potential-shaping + S'-redistribution subspace; standardization divides by the l2 norm
 * (or returns zero below `zero_tolerance()`); the distance is half the l2 distance between
 * standardized rewards. The projector is built once and shared by copies.
 */
class StarcMetric {
  public:
    explicit StarcMetric(const TabularMdp& mdp);

    const TabularMdp& mdp() const noexcept { return mdp_; }
    const InvarianceProjector& projector() const noexcept { return *projector_; }
    /// 1e-10 times the reward tensor dimension.
    double zero_tolerance() const noexcept { return zero_tol_; }

    CanonicalReward canonicalize(const RewardFunction& reward) const;
    StandardizedReward standardize(const RewardFunction& reward) const;
    MetricReport distance(const RewardFunction& r1, const RewardFunction& r2) const;

    /// Standardized reward in the projector's unit-row coordinates (isometric to the tensor).
    Eigen::VectorXd standardized_coordinates(const RewardFunction& reward) const;
    static double distance_between(const Eigen::VectorXd& unit1, const Eigen::VectorXd& unit2) {
        return 0.5 * (unit1 - unit2).norm();
    }

  private:
    TabularMdp mdp_;
    std::shared_ptr<const InvarianceProjector> projector_;
    double zero_tol_;
};

CanonicalReward canonicalize(const TabularMdp& mdp, const RewardFunction& reward);
StandardizedReward standardize(const TabularMdp& mdp, const RewardFunction& reward);
MetricReport starc_distance(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2);

struct RegretGap {
    double normalized_regret;
    /// (pi1, pi2) attaining the maximum; empty when R1 is trivial over deterministic policies.
    std::optional<std::pair<Policy, Policy>> witness;
};

/// Largest (J1(pi1) - J1(pi2)) / (max J1 - min J1) over deterministic pairs with J2(pi2) >= J2(pi1).
RegretGap regret_gap(const TabularMdp& mdp, const RewardFunction& r1, const RewardFunction& r2,
                     std::size_t cap = 4096);

}  // namespace starclab
