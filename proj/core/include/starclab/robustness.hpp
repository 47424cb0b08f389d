#pragma once

#include "starclab/behavior.hpp"
#include "starclab/mdp.hpp"
#include "starclab/transforms.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace starclab {

/// Finite set of hypothesis rewards with unique ids.
class HypothesisSet {
  public:
    explicit HypothesisSet(std::vector<NamedReward> rewards);

    const std::vector<NamedReward>& rewards() const noexcept { return rewards_; }
    std::size_t size() const noexcept { return rewards_.size(); }
    const NamedReward& operator[](std::size_t i) const { return rewards_[i]; }
    std::vector<std::string> ids() const;

  private:
    std::vector<NamedReward> rewards_;
};

/// Default l_inf tolerance under which two policies count as equal.
inline constexpr double kPolicyEqualityTolerance = 1e-6;
/// Slack added to epsilon before a measured reward distance counts as a violation.
inline constexpr double kDistanceSlack = 1e-8;

struct Violation {
    /// 1: f-g collision too far apart; 2: f-f collision too far apart;
    /// 3: a g-policy outside the image of f; 4: f and g agree on every reward.
    int condition;
    std::vector<std::string> reward_ids;
    /// Reward distance for conditions 1 and 2, policy gap for 3 and 4.
    double measured;
};

struct RobustnessVerdict {
    bool robust;
    double epsilon;
    double eta;
    std::vector<Violation> violations;

    std::size_t count(int condition) const;
};

/**
 * Checks the four robustness conditions of f against g on a finite hypothesis set, with
 * policies equal when their l_inf gap is at most eta. Violations are enumerated exhaustively.
 */
RobustnessVerdict check_epsilon_robust(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                                       const TabularMdp& eval_env, double epsilon,
                                       double eta = kPolicyEqualityTolerance);

/// Smallest epsilon meeting conditions 1 and 2, or +inf when condition 3 or 4 fails.
double min_robust_epsilon(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                          const TabularMdp& eval_env, double eta = kPolicyEqualityTolerance);

/**
 * For a verdict that is robust, checks that every pair of hypotheses with colliding g-policies
 * is within 2 * epsilon. PreconditionError if the pair (f, g) is not robust at epsilon.
 */
bool two_epsilon_lemma_check(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                             const TabularMdp& eval_env, double epsilon, double eta = kPolicyEqualityTolerance);

/// ||canonical(R)|| * sin(2 * arcsin(epsilon / 2)).
double nudge_bound(double canonical_norm, double epsilon);

struct ProbeReport {
    double nudge_norm;
    double nudge_bound;
    double distance;
    bool nudge_ok;
    bool distance_ok;
};

struct TransformationBoundReport {
    bool holds;
    double epsilon;
    std::vector<ProbeReport> probes;
};

/**
 * For every probe R, checks that the chain's nudge (if any) is within nudge_bound of the
 * reward it is applied to (+1e-9), and that starc_distance(R, chain(R)) <= epsilon + 1e-8.
 * ValidationError for chains with more than one nudge.
 */
TransformationBoundReport verify_transformation_bound(const TabularMdp& mdp, const TransformChain& chain,
                                                      const std::vector<RewardFunction>& probes, double epsilon);

/// Potential and redistribution with shaping(phi) + delta equal to `residual`, a vector in the invariance subspace.
std::pair<PotentialFunction, RewardFunction> split_invariant_part(const TabularMdp& mdp,
                                                                 const RewardFunction& residual);

/**
 * Chain taking R to R_target: shaping and redistribution onto the canonical reward, scale to
 * unit norm, scale onto the right triangle with the target direction, one nudge, rescale to
 * the target's canonical norm, then shaping and redistribution back out. When the standardized
 * rewards are at least a right angle apart the nudge goes straight to the target direction.
 * PreconditionError if R is non-trivial and R_target is trivial.
 */
TransformChain decompose_transformation(const TabularMdp& mdp, const RewardFunction& reward,
                                        const RewardFunction& target);

enum class PolicyMetric { l2, linf, occupancy_l2 };

const char* to_string(PolicyMetric metric);
PolicyMetric policy_metric_from_string(const std::string& name);

/// d^Pi between two policies; occupancy_l2 compares occupancy measures in `mdp`.
double policy_distance(PolicyMetric metric, const TabularMdp& mdp, const Policy& p1, const Policy& p2);

struct SeparationWitness {
    RewardFunction r1;
    RewardFunction r2;
    double reward_distance;
    double policy_distance;
    std::size_t samples_used;
};

/**
 * Looks for R1, R2 with starc_distance > epsilon and d^Pi(f(R1), f(R2)) <= delta by scanning
 * pairs s*R + R_phi, -s*R + R_phi over seeded canonical R and shaping R_phi with geometrically
 * shrinking s (floored at 1e-8). An empty result is inconclusive.
 */
std::optional<SeparationWitness> separation_witness_search(const BehavioralModelSpec& model, const TabularMdp& mdp,
                                                           PolicyMetric metric, double epsilon, double delta,
                                                           std::uint64_t seed, std::size_t budget);

enum class Scenario { discount, transition, perturbation, optimality };

const char* to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);

/**
 * A pair of rewards the generating model maps to (nearly) the same policy although they are
 * far apart under the evaluation environment. Everything needed to recheck it is embedded.
 */
struct CounterexampleCertificate {
    Scenario scenario;
    BehavioralModelSpec model;
    TabularMdp evaluation_env;
    PolicyMetric policy_metric;
    RewardFunction r1;
    RewardFunction r2;
    double policy_gap;
    double starc_distance;
    /// The claim: policy_gap < policy_gap_limit and starc_distance >= distance_floor.
    double policy_gap_limit;
    double distance_floor;
    std::map<std::string, double> parameters;
    std::string description;

    bool claim_holds() const { return policy_gap < policy_gap_limit && starc_distance >= distance_floor; }
};

struct CertificateCheck {
    bool valid;
    double policy_gap;
    double starc_distance;
    double policy_gap_error;
    double distance_error;
};

/// Recomputes the policy gap and distance from the embedded inputs and checks the claim.
CertificateCheck verify_certificate(const CounterexampleCertificate& certificate, double tolerance = 1e-8);

/**
 * R1 = eps*R + R_phi and R2 = -eps*R + R_phi with R a seeded unit canonical reward and R_phi a
 * shaping reward with ||R_phi|| = sqrt(c^2 - eps^2). eps is shrunk geometrically and then
 * bisected until the policy gap lies in [delta/2, delta).
 */
CounterexampleCertificate perturbation_counterexample(const TabularMdp& mdp, const BehavioralModelSpec& model,
                                                      double c, double delta, PolicyMetric metric = PolicyMetric::l2,
                                                      std::uint64_t seed = 0);

/// R and -R for a reward invisible to shaping-invariant models under gamma1, evaluated under gamma2.
CounterexampleCertificate discount_counterexample(const TabularMdp& env, double gamma1, double gamma2,
                                                  ModelKind kind, double parameter,
                                                  double eta = kPolicyEqualityTolerance, std::uint64_t seed = 0);

/// R and -R for a reward that is a redistribution under the model's kernel but not under the evaluation kernel.
CounterexampleCertificate transition_counterexample(const TabularMdp& model_env, const TabularMdp& eval_env,
                                                    ModelKind kind, double parameter,
                                                    double eta = kPolicyEqualityTolerance);

struct Gridworld {
    std::size_t size;
    /// Actions: 0 up, 1 down, 2 left, 3 right. State index y * N + x on the torus.
    TabularMdp deterministic;
    /// Each action reaches its target and the two diagonal neighbours beside it with probability 1/3.
    TabularMdp slippery;
};

Gridworld make_gridworld(std::size_t n, double discount);

/// +1 for steps with a rightward component, -1 leftward, 0 otherwise.
RewardFunction movement_reward(const Gridworld& grid);

struct GridworldDemo {
    Gridworld grid;
    RewardFunction r1;
    RewardFunction r2;
    CounterexampleCertificate certificate;
    std::string description;
};

/**
 * R2 = R1 + D where, per (s, a), D is the minimum-norm solution of E_slippery[D] = 0 and
 * E_deterministic[D] = -2 E_deterministic[R1]. The MCE model in the slippery world cannot tell
 * R1 from R2, which order policies oppositely in the deterministic world.
 */
GridworldDemo gridworld_demo(std::size_t n, double discount, double alpha, double eta = kPolicyEqualityTolerance);

/**
 * Two rewards with the same optimal-uniform policy but STARC distance above 1e-3: a seeded reward
 * and a copy whose suboptimal state-action pairs are lowered by independent random amounts.
 * PreconditionError for |S| = 1 with |A| <= 2, where no such pair exists.
 */
CounterexampleCertificate optimality_nonrobustness_witness(const TabularMdp& mdp, std::uint64_t seed = 0,
                                                           std::size_t samples = 100,
                                                           double eta = kPolicyEqualityTolerance);

}  // namespace starclab
