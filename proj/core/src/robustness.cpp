#include "starclab/robustness.hpp"

#include "sampling.hpp"
#include "starclab/errors.hpp"
#include "starclab/starc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace starclab {

HypothesisSet::HypothesisSet(std::vector<NamedReward> rewards) : rewards_(std::move(rewards)) {
    if (rewards_.empty()) throw ValidationError("hypothesis set is empty");
    std::set<std::string> seen;
    for (const auto& r : rewards_) {
        if (!seen.insert(r.id).second) throw ValidationError("duplicate hypothesis id '" + r.id + "'");
        if (!r.reward.same_shape(rewards_.front().reward)) {
            throw ValidationError("hypothesis '" + r.id + "' has a different shape from '" + rewards_.front().id + "'");
        }
    }
}

std::vector<std::string> HypothesisSet::ids() const {
    std::vector<std::string> out;
    out.reserve(rewards_.size());
    for (const auto& r : rewards_) out.push_back(r.id);
    return out;
}

std::size_t RobustnessVerdict::count(int condition) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const Violation& v) { return v.condition == condition; }));
}

namespace {

void check_tables(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses) {
    const auto ids = hypotheses.ids();
    if (f.ids != ids) throw ValidationError("model table f was not materialized over the hypothesis set");
    if (g.ids != ids) throw ValidationError("model table g was not materialized over the hypothesis set");
    if (f.policies.size() != ids.size() || g.policies.size() != ids.size()) {
        throw ValidationError("model table has a policy count different from its id count");
    }
}

// Pairwise STARC distances of the hypotheses.
Eigen::MatrixXd distance_table(const HypothesisSet& hypotheses, const TabularMdp& eval_env) {
    const StarcMetric metric(eval_env);
    const auto n = static_cast<Eigen::Index>(hypotheses.size());
    std::vector<Eigen::VectorXd> units;
    units.reserve(hypotheses.size());
    for (const auto& h : hypotheses.rewards()) units.push_back(metric.standardized_coordinates(h.reward));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = StarcMetric::distance_between(units[static_cast<std::size_t>(i)],
                                                              units[static_cast<std::size_t>(j)]);
        }
    }
    return d;
}

struct CollisionScan {
    std::vector<Violation> violations;
    double max_collision_distance = 0.0;
    double max_g_collision_distance = 0.0;
};

CollisionScan scan(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                   const TabularMdp& eval_env, double epsilon, double eta) {
    if (!(eta >= 0.0)) throw ValidationError("eta must be non-negative");
    check_tables(f, g, hypotheses);
    const Eigen::MatrixXd d = distance_table(hypotheses, eval_env);
    const std::size_t n = hypotheses.size();
    const auto& ids = f.ids;
    const double limit = epsilon + kDistanceSlack;
    CollisionScan out;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (linf_distance(f.policies[i], g.policies[j]) > eta) continue;
            const double dij = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out.max_collision_distance = std::max(out.max_collision_distance, dij);
            if (dij > limit) out.violations.push_back({1, {ids[i], ids[j]}, dij});
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (linf_distance(f.policies[i], f.policies[j]) > eta) continue;
            const double dij = d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out.max_collision_distance = std::max(out.max_collision_distance, dij);
            if (dij > limit) out.violations.push_back({2, {ids[i], ids[j]}, dij});
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        double closest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) closest = std::min(closest, linf_distance(g.policies[j], f.policies[i]));
        if (closest > eta) out.violations.push_back({3, {ids[j]}, closest});
    }
    double widest = 0.0;
    for (std::size_t i = 0; i < n; ++i) widest = std::max(widest, linf_distance(f.policies[i], g.policies[i]));
    if (!(widest > eta)) out.violations.push_back({4, {}, widest});

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (linf_distance(g.policies[i], g.policies[j]) > eta) continue;
            out.max_g_collision_distance =
                std::max(out.max_g_collision_distance, d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    return out;
}

}  // namespace

RobustnessVerdict check_epsilon_robust(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                                       const TabularMdp& eval_env, double epsilon, double eta) {
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
    CollisionScan result = scan(f, g, hypotheses, eval_env, epsilon, eta);
    const bool robust = result.violations.empty();
    return {robust, epsilon, eta, std::move(result.violations)};
}

double min_robust_epsilon(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                          const TabularMdp& eval_env, double eta) {
    const CollisionScan result = scan(f, g, hypotheses, eval_env, std::numeric_limits<double>::infinity(), eta);
    for (const auto& v : result.violations) {
        if (v.condition == 3 || v.condition == 4) return std::numeric_limits<double>::infinity();
    }
    return result.max_collision_distance;
}

bool two_epsilon_lemma_check(const ModelTable& f, const ModelTable& g, const HypothesisSet& hypotheses,
                             const TabularMdp& eval_env, double epsilon, double eta) {
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
    const CollisionScan result = scan(f, g, hypotheses, eval_env, epsilon, eta);
    if (!result.violations.empty()) {
        throw PreconditionError("the lemma applies only to pairs that are robust at the given epsilon");
    }
    return result.max_g_collision_distance <= 2.0 * epsilon + kDistanceSlack;
}

double nudge_bound(double canonical_norm, double epsilon) {
    const double half = std::clamp(epsilon / 2.0, 0.0, 1.0);
    return canonical_norm * std::sin(2.0 * std::asin(half));
}

TransformationBoundReport verify_transformation_bound(const TabularMdp& mdp, const TransformChain& chain,
                                                      const std::vector<RewardFunction>& probes, double epsilon) {
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
    const auto nudges = std::count_if(chain.begin(), chain.end(), [](const TransformStep& s) {
        return std::holds_alternative<step::Nudge>(s);
    });
    if (nudges > 1) throw ValidationError("chain has more than one nudge step");
    validate_chain(mdp, chain);

    const StarcMetric metric(mdp);
    TransformationBoundReport report{true, epsilon, {}};
    for (const auto& probe : probes) {
        probe.check_shape(mdp);
        ProbeReport pr{0.0, 0.0, 0.0, true, true};
        RewardFunction current = probe;
        for (const auto& s : chain) {
            if (const auto* nudge = std::get_if<step::Nudge>(&s)) {
                pr.nudge_norm = nudge->delta.norm();
                pr.nudge_bound = nudge_bound(metric.canonicalize(current).norm, epsilon);
                pr.nudge_ok = pr.nudge_norm <= pr.nudge_bound + 1e-9;
            }
            current = apply_step(mdp, s, current);
        }
        pr.distance = metric.distance(probe, current).distance;
        pr.distance_ok = pr.distance <= epsilon + kDistanceSlack;
        report.holds = report.holds && pr.nudge_ok && pr.distance_ok;
        report.probes.push_back(pr);
    }
    return report;
}

std::pair<PotentialFunction, RewardFunction> split_invariant_part(const TabularMdp& mdp,
                                                                 const RewardFunction& residual) {
    residual.check_shape(mdp);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());
    // Conditional means of a shaping reward are (gamma * tau - E) phi; the redistribution part has none.
    Eigen::MatrixXd system = mdp.discount() * mdp.transition();
    for (Eigen::Index s = 0; s < S; ++s) system.middleRows(s * A, A).col(s).array() -= 1.0;
    const Eigen::MatrixXd mean = expected_reward(mdp, residual);
    Eigen::VectorXd rhs(S * A);
    for (Eigen::Index s = 0; s < S; ++s) rhs.segment(s * A, A) = mean.row(s).transpose();
    PotentialFunction potential{system.colPivHouseholderQr().solve(rhs)};
    RewardFunction delta =
        residual - shaping_reward(mdp.n_states(), mdp.n_actions(), potential, mdp.discount());
    return {std::move(potential), std::move(delta)};
}

TransformChain decompose_transformation(const TabularMdp& mdp, const RewardFunction& reward,
                                        const RewardFunction& target) {
    reward.check_shape(mdp);
    target.check_shape(mdp);
    const StarcMetric metric(mdp);
    const CanonicalReward c1 = metric.canonicalize(reward);
    const CanonicalReward c2 = metric.canonicalize(target);
    const bool trivial1 = !(c1.norm > metric.zero_tolerance());
    const bool trivial2 = !(c2.norm > metric.zero_tolerance());
    if (trivial2 && !trivial1) {
        throw PreconditionError(
            "target reward is trivial: its standardized form is the zero branch, which no positive scaling of a "
            "non-trivial reward reaches");
    }

    TransformChain chain;
    auto [phi_in, delta_in] = split_invariant_part(mdp, reward - c1.canonical);
    chain.emplace_back(step::Shaping{PotentialFunction{-phi_in.phi}});
    chain.emplace_back(step::Redistribution{-delta_in});
    // The reward the chain has actually reached, tracked so the nudge absorbs rounding.
    RewardFunction reached = apply_chain(mdp, chain, reward);

    if (trivial1) {
        chain.emplace_back(step::Nudge{c2.canonical - reached});
    } else {
        const double inv = 1.0 / c1.norm;
        chain.emplace_back(step::Scale{inv});
        const RewardFunction s1 = c1.canonical * inv;
        const RewardFunction s2 = c2.canonical * (1.0 / c2.norm);
        const double cosine = std::clamp(s1.values().dot(s2.values()), -1.0, 1.0);
        // Right triangle: k*s1 -> s2 with the nudge orthogonal to s2, so ||nudge|| = k*sin(theta).
        const double k = cosine > 1e-3 ? 1.0 / cosine : 1.0;
        chain.emplace_back(step::Scale{k});
        const RewardFunction before = reached * (inv * k);
        chain.emplace_back(step::Nudge{s2 - before});
        chain.emplace_back(step::Scale{c2.norm});
    }
    auto [phi_out, delta_out] = split_invariant_part(mdp, target - c2.canonical);
    chain.emplace_back(step::Shaping{std::move(phi_out)});
    chain.emplace_back(step::Redistribution{std::move(delta_out)});
    return chain;
}

const char* to_string(PolicyMetric metric) {
    switch (metric) {
        case PolicyMetric::l2: return "l2";
        case PolicyMetric::linf: return "linf";
        case PolicyMetric::occupancy_l2: return "occupancy_l2";
    }
    return "?";
}

PolicyMetric policy_metric_from_string(const std::string& name) {
    if (name == "l2") return PolicyMetric::l2;
    if (name == "linf") return PolicyMetric::linf;
    if (name == "occupancy_l2") return PolicyMetric::occupancy_l2;
    throw ValidationError("unknown policy metric '" + name + "' (expected l2, linf or occupancy_l2)");
}

double policy_distance(PolicyMetric metric, const TabularMdp& mdp, const Policy& p1, const Policy& p2) {
    switch (metric) {
        case PolicyMetric::l2: return l2_distance(p1, p2);
        case PolicyMetric::linf: return linf_distance(p1, p2);
        case PolicyMetric::occupancy_l2:
            return (occupancy_measure(mdp, p1).triples - occupancy_measure(mdp, p2).triples).norm();
    }
    throw InternalError("unhandled policy metric");
}

namespace {

// Seeded canonical reward of unit norm, or PreconditionError when every reward is trivial.
RewardFunction unit_canonical_reward(const StarcMetric& metric, std::uint64_t seed) {
    const TabularMdp& mdp = metric.mdp();
    if (metric.projector().canonical_dimension() == 0) {
        throw PreconditionError("every reward is trivial in this environment (a single action)");
    }
    for (std::uint64_t k = 0; k < 100; ++k) {
        const RewardFunction r = random_reward(seed * 7919 + k, mdp.n_states(), mdp.n_actions());
        const CanonicalReward c = metric.canonicalize(r);
        if (c.norm > 1e-6) return c.canonical * (1.0 / c.norm);
    }
    throw InternalError("random rewards keep canonicalizing to zero");
}

// Seeded shaping reward of unit norm.
RewardFunction unit_shaping_reward(const TabularMdp& mdp, std::uint64_t seed) {
    auto rng = detail::make_rng(seed, 0x706869);
    for (int k = 0; k < 100; ++k) {
        const PotentialFunction phi{detail::standard_normal(rng, static_cast<Eigen::Index>(mdp.n_states()))};
        const RewardFunction r = shaping_reward(mdp.n_states(), mdp.n_actions(), phi, mdp.discount());
        const double n = r.norm();
        if (n > 1e-12) return r * (1.0 / n);
    }
    throw InternalError("random potentials keep producing zero shaping rewards");
}

}  // namespace

std::optional<SeparationWitness> separation_witness_search(const BehavioralModelSpec& model, const TabularMdp& mdp,
                                                           PolicyMetric metric, double epsilon, double delta,
                                                           std::uint64_t seed, std::size_t budget) {
    if (budget < 1) throw ValidationError("budget must be at least 1");
    if (!(delta >= 0.0)) throw ValidationError("delta must be non-negative");
    model.validate();
    // Distances never exceed one.
    if (epsilon >= 1.0) return std::nullopt;

    const StarcMetric starc(mdp);
    if (starc.projector().canonical_dimension() == 0) return std::nullopt;
    constexpr std::size_t kScales = 32;
    constexpr double kScaleFloor = 1e-8;
    RewardFunction base = unit_canonical_reward(starc, seed);
    RewardFunction shaping = unit_shaping_reward(mdp, seed);
    for (std::size_t k = 0; k < budget; ++k) {
        if (k > 0 && k % kScales == 0) {
            base = unit_canonical_reward(starc, seed + k / kScales);
            shaping = unit_shaping_reward(mdp, seed + k / kScales);
        }
        const double s = std::max(kScaleFloor, std::ldexp(1.0, -static_cast<int>(k % kScales)));
        const RewardFunction r1 = base * s + shaping;
        const RewardFunction r2 = base * (-s) + shaping;
        const double d = starc.distance(r1, r2).distance;
        if (!(d > epsilon)) continue;
        const double gap = policy_distance(metric, model.environment, model.apply(r1), model.apply(r2));
        if (gap <= delta) return SeparationWitness{r1, r2, d, gap, k + 1};
    }
    return std::nullopt;
}

const char* to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::discount: return "discount";
        case Scenario::transition: return "transition";
        case Scenario::perturbation: return "perturbation";
        case Scenario::optimality: return "optimality";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    if (name == "discount") return Scenario::discount;
    if (name == "transition") return Scenario::transition;
    if (name == "perturbation") return Scenario::perturbation;
    if (name == "optimality") return Scenario::optimality;
    throw ValidationError("unknown scenario '" + name + "'");
}

CertificateCheck verify_certificate(const CounterexampleCertificate& cert, double tolerance) {
    const double gap =
        policy_distance(cert.policy_metric, cert.model.environment, cert.model.apply(cert.r1), cert.model.apply(cert.r2));
    const double distance = starc_distance(cert.evaluation_env, cert.r1, cert.r2).distance;
    CertificateCheck check{false, gap, distance, std::abs(gap - cert.policy_gap),
                           std::abs(distance - cert.starc_distance)};
    check.valid = check.policy_gap_error <= tolerance && check.distance_error <= tolerance &&
                  gap < cert.policy_gap_limit && distance >= cert.distance_floor;
    return check;
}

namespace {

CounterexampleCertificate certify(Scenario scenario, BehavioralModelSpec model, TabularMdp eval_env,
                                  PolicyMetric metric, RewardFunction r1, RewardFunction r2, double gap_limit,
                                  double distance_floor, std::map<std::string, double> parameters,
                                  std::string description) {
    const double gap = policy_distance(metric, model.environment, model.apply(r1), model.apply(r2));
    const double distance = starc_distance(eval_env, r1, r2).distance;
    return {scenario,   std::move(model), std::move(eval_env), metric,         std::move(r1),
            std::move(r2), gap,           distance,            gap_limit,      distance_floor,
            std::move(parameters), std::move(description)};
}

void add_model_parameter(std::map<std::string, double>& params, ModelKind kind, double parameter) {
    if (kind == ModelKind::boltzmann) params["beta"] = parameter;
    if (kind == ModelKind::mce) params["alpha"] = parameter;
}

BehavioralModelSpec make_model(ModelKind kind, double parameter, TabularMdp env) {
    switch (kind) {
        case ModelKind::optimal_uniform: return BehavioralModelSpec::optimal(std::move(env));
        case ModelKind::boltzmann: return BehavioralModelSpec::boltzmann(std::move(env), parameter);
        case ModelKind::mce: return BehavioralModelSpec::mce(std::move(env), parameter);
    }
    throw InternalError("unhandled model kind");
}

constexpr double kOppositeFloor = 1.0 - 1e-6;

}  // namespace

CounterexampleCertificate perturbation_counterexample(const TabularMdp& mdp, const BehavioralModelSpec& model, double c,
                                                      double delta, PolicyMetric metric, std::uint64_t seed) {
    if (!model.continuous()) {
        throw PreconditionError("the perturbation construction needs a continuous model (boltzmann or mce)");
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("c must be a finite positive number");
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
    model.validate();

    const StarcMetric starc(mdp);
    const RewardFunction base = unit_canonical_reward(starc, seed);
    const RewardFunction shaping = unit_shaping_reward(mdp, seed);
    const auto pair_at = [&](double eps) {
        const RewardFunction r_phi = shaping * std::sqrt(std::max(0.0, c * c - eps * eps));
        return std::make_pair(base * eps + r_phi, base * (-eps) + r_phi);
    };
    const auto gap_at = [&](double eps) {
        const auto [r1, r2] = pair_at(eps);
        return policy_distance(metric, model.environment, model.apply(r1), model.apply(r2));
    };

    double hi = c;
    double lo = 0.5 * c;
    double gap_lo = gap_at(lo);
    while (gap_lo >= delta) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300) {
            throw Error("perturbation search underflowed: epsilon fell below 1e-300 with policy gap " +
                        std::to_string(gap_lo) + " still above delta " + std::to_string(delta));
        }
        gap_lo = gap_at(lo);
    }
    // Largest epsilon found so far keeps the gap below delta; bisect towards delta/2 <= gap.
    for (int it = 0; it < 200 && gap_lo < 0.5 * delta && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gap_mid = gap_at(mid);
        if (gap_mid < delta) {
            lo = mid;
            gap_lo = gap_mid;
        } else {
            hi = mid;
        }
    }

    auto [r1, r2] = pair_at(lo);
    std::map<std::string, double> params{{"c", c}, {"delta", delta}, {"epsilon", lo}, {"seed", double(seed)}};
    add_model_parameter(params, model.kind, model.parameter);
    std::ostringstream desc;
    desc << "R1 = eps*R + R_phi and R2 = -eps*R + R_phi with eps = " << lo
         << ": opposite policy orderings, policies within delta";
    return certify(Scenario::perturbation, model, mdp, metric, std::move(r1), std::move(r2), delta, kOppositeFloor,
                   std::move(params), desc.str());
}

CounterexampleCertificate discount_counterexample(const TabularMdp& env, double gamma1, double gamma2, ModelKind kind,
                                                  double parameter, double eta, std::uint64_t seed) {
    const DiscountInvisibleReward invisible = invisible_reward_discount(env, gamma1, gamma2, seed);
    std::map<std::string, double> params{{"gamma1", gamma1}, {"gamma2", gamma2}, {"eta", eta}};
    add_model_parameter(params, kind, parameter);
    return certify(Scenario::discount, make_model(kind, parameter, env.with_discount(gamma1)),
                   env.with_discount(gamma2), PolicyMetric::linf, invisible.reward, -invisible.reward, eta,
                   kOppositeFloor, std::move(params),
                   "R and -R for a shaping reward under gamma1 that is non-trivial under gamma2");
}

CounterexampleCertificate transition_counterexample(const TabularMdp& model_env, const TabularMdp& eval_env,
                                                    ModelKind kind, double parameter, double eta) {
    const TransitionInvisibleReward invisible = invisible_reward_transition(model_env, eval_env);
    std::map<std::string, double> params{{"gamma", model_env.discount()},
                                         {"eta", eta},
                                         {"state", double(invisible.state)},
                                         {"action", double(invisible.action)}};
    add_model_parameter(params, kind, parameter);
    std::ostringstream desc;
    desc << "R and -R for a reward supported on (s=" << invisible.state << ", a=" << invisible.action
         << ") with zero mean under the model's kernel and unit mean under the evaluation kernel";
    return certify(Scenario::transition, make_model(kind, parameter, model_env), eval_env, PolicyMetric::linf,
                   invisible.reward, -invisible.reward, eta, kOppositeFloor, std::move(params), desc.str());
}

namespace {

struct Move {
    int dx;
    int dy;
};

// Up, down, left, right and, for each, the two diagonal neighbours beside its target.
constexpr Move kTargets[4] = {{0, 1}, {0, -1}, {-1, 0}, {1, 0}};
constexpr Move kSlips[4][2] = {{{-1, 1}, {1, 1}}, {{-1, -1}, {1, -1}}, {{-1, 1}, {-1, -1}}, {{1, 1}, {1, -1}}};

std::size_t step_on_torus(std::size_t s, Move m, std::size_t n) {
    const auto N = static_cast<long>(n);
    const long x = static_cast<long>(s % n);
    const long y = static_cast<long>(s / n);
    const long nx = ((x + m.dx) % N + N) % N;
    const long ny = ((y + m.dy) % N + N) % N;
    return static_cast<std::size_t>(ny * N + nx);
}

// Horizontal displacement from s to next on the torus, as the nearest image.
int horizontal_sign(std::size_t s, std::size_t next, std::size_t n) {
    const auto N = static_cast<long>(n);
    long dx = (static_cast<long>(next % n) - static_cast<long>(s % n) + N) % N;
    if (dx == 0) return 0;
    if (2 * dx <= N) return 1;
    return -1;
}

}  // namespace

Gridworld make_gridworld(std::size_t n, double discount) {
    if (n < 2) throw ValidationError("gridworld size must be at least 2");
    const std::size_t S = n * n;
    Eigen::MatrixXd det = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S * 4), static_cast<Eigen::Index>(S));
    Eigen::MatrixXd slip = det;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < 4; ++a) {
            const auto row = static_cast<Eigen::Index>(s * 4 + a);
            det(row, static_cast<Eigen::Index>(step_on_torus(s, kTargets[a], n))) = 1.0;
            slip(row, static_cast<Eigen::Index>(step_on_torus(s, kTargets[a], n))) += 1.0 / 3.0;
            for (const Move m : kSlips[a]) slip(row, static_cast<Eigen::Index>(step_on_torus(s, m, n))) += 1.0 / 3.0;
        }
    }
    const Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(S), 1.0 / static_cast<double>(S));
    return {n, TabularMdp(S, 4, std::move(det), mu0, discount), TabularMdp(S, 4, std::move(slip), mu0, discount)};
}

RewardFunction movement_reward(const Gridworld& grid) {
    const std::size_t S = grid.size * grid.size;
    RewardFunction r = RewardFunction::zeros(S, 4);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t next = 0; next < S; ++next) r(s, a, next) = horizontal_sign(s, next, grid.size);
        }
    }
    return r;
}

GridworldDemo gridworld_demo(std::size_t n, double discount, double alpha, double eta) {
    Gridworld grid = make_gridworld(n, discount);
    const RewardFunction r1 = movement_reward(grid);
    const auto S = static_cast<Eigen::Index>(n * n);
    const Eigen::MatrixXd mean = expected_reward(grid.deterministic, r1);

    Eigen::VectorXd values = r1.values();
    for (Eigen::Index row = 0; row < S * 4; ++row) {
        const double m = mean(row / 4, row % 4);
        if (m == 0.0) continue;
        Eigen::MatrixXd constraints(2, S);
        constraints.row(0) = grid.deterministic.transition().row(row);
        constraints.row(1) = grid.slippery.transition().row(row);
        const Eigen::Matrix2d gram = constraints * constraints.transpose();
        const Eigen::Vector2d rhs(-2.0 * m, 0.0);
        values.segment(row * S, S) += constraints.transpose() * gram.ldlt().solve(rhs);
    }
    RewardFunction r2(r1.n_states(), r1.n_actions(), std::move(values));

    std::ostringstream desc;
    desc << n << "x" << n << " torus gridworld, actions up/down/left/right. The model (MCE, alpha " << alpha
         << ") acts in the slippery world where each move also lands on the two diagonal neighbours beside its "
            "target; rewards are evaluated in the deterministic world. R1 pays +1 for rightward steps and -1 for "
            "leftward steps; R2 has the same slippery-world conditional means but mirrors R1 in the "
            "deterministic world.";
    std::map<std::string, double> params{{"n", double(n)}, {"gamma", discount}, {"alpha", alpha}, {"eta", eta}};
    CounterexampleCertificate cert =
        certify(Scenario::transition, BehavioralModelSpec::mce(grid.slippery, alpha), grid.deterministic,
                PolicyMetric::linf, r1, r2, eta, 0.99, std::move(params), desc.str());
    std::string description = cert.description;
    return {std::move(grid), r1, r2, std::move(cert), std::move(description)};
}

CounterexampleCertificate optimality_nonrobustness_witness(const TabularMdp& mdp, std::uint64_t seed,
                                                           std::size_t samples, double eta) {
    if (mdp.n_states() == 1 && mdp.n_actions() <= 2) {
        throw PreconditionError(
            "no witness exists with one state and at most two actions: equal optimal policies there imply equal "
            "policy orderings");
    }
    if (mdp.n_actions() == 1) throw PreconditionError("no witness exists with a single action: every reward is trivial");
    const StarcMetric starc(mdp);
    const BehavioralModelSpec model = BehavioralModelSpec::optimal(mdp);
    auto rng = detail::make_rng(seed, 0x6f7074);
    std::uniform_real_distribution<double> lower(0.5, 1.5);
    const auto S = static_cast<Eigen::Index>(mdp.n_states());
    const auto A = static_cast<Eigen::Index>(mdp.n_actions());

    for (std::size_t k = 0; k < samples; ++k) {
        const RewardFunction r1 = random_reward(seed * 104729 + k, mdp.n_states(), mdp.n_actions());
        const Policy pi1 = model.apply(r1);
        // Lowering rewards of suboptimal pairs leaves V* and every argmax set unchanged.
        Eigen::VectorXd values = r1.values();
        bool lowered = false;
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index a = 0; a < A; ++a) {
                const double amount = lower(rng);
                if (pi1.probs()(s, a) > 0.0) continue;
                values.segment((s * A + a) * S, S).array() -= amount;
                lowered = true;
            }
        }
        if (!lowered) continue;
        RewardFunction r2(mdp.n_states(), mdp.n_actions(), std::move(values));
        const double gap = linf_distance(pi1, model.apply(r2));
        const double distance = starc.distance(r1, r2).distance;
        if (gap < eta && distance > 1e-3) {
            std::map<std::string, double> params{{"eta", eta}, {"seed", double(seed)}, {"sample", double(k)}};
            return certify(Scenario::optimality, model, mdp, PolicyMetric::linf, r1, std::move(r2), eta, 1e-3,
                           std::move(params),
                           "same optimal-uniform policy, different policy orderings: suboptimal pairs lowered by "
                           "independent amounts");
        }
    }
    throw Error("no optimality witness found within " + std::to_string(samples) + " samples");
}

}  // namespace starclab
