#include "starclab/io.hpp"

#include "starclab/errors.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace starclab::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
}

std::size_t count(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) fail(path, "expected a positive integer");
    const auto x = j.get<long long>();
    if (x < 1) fail(path, "expected a positive integer");
    return static_cast<std::size_t>(x);
}

Eigen::VectorXd vector(const json& j, std::size_t n, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    if (j.size() != n) fail(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

// [s][a][s'] nested array into the flat (s*A+a)*S+s' layout.
Eigen::VectorXd tensor(const json& j, std::size_t S, std::size_t A, const std::string& path) {
    if (!j.is_array() || j.size() != S) fail(path, "expected an array of " + std::to_string(S) + " states");
    Eigen::VectorXd out(static_cast<Eigen::Index>(S * A * S));
    for (std::size_t s = 0; s < S; ++s) {
        const std::string ps = path + "[" + std::to_string(s) + "]";
        if (!j[s].is_array() || j[s].size() != A) fail(ps, "expected an array of " + std::to_string(A) + " actions");
        for (std::size_t a = 0; a < A; ++a) {
            out.segment(static_cast<Eigen::Index>((s * A + a) * S), static_cast<Eigen::Index>(S)) =
                vector(j[s][a], S, ps + "[" + std::to_string(a) + "]");
        }
    }
    return out;
}

json nested(const Eigen::VectorXd& flat, std::size_t S, std::size_t A) {
    json out = json::array();
    for (std::size_t s = 0; s < S; ++s) {
        json per_state = json::array();
        for (std::size_t a = 0; a < A; ++a) {
            json row = json::array();
            for (std::size_t n = 0; n < S; ++n) row.push_back(flat[static_cast<Eigen::Index>((s * A + a) * S + n)]);
            per_state.push_back(std::move(row));
        }
        out.push_back(std::move(per_state));
    }
    return out;
}

json array(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

// Rewrites a library error so that it names the JSON path.
template <typename F>
auto at_path(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
}

}  // namespace

json to_json(const TabularMdp& mdp) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    Eigen::VectorXd flat(static_cast<Eigen::Index>(S * A * S));
    for (std::size_t row = 0; row < S * A; ++row) {
        flat.segment(static_cast<Eigen::Index>(row * S), static_cast<Eigen::Index>(S)) =
            mdp.transition().row(static_cast<Eigen::Index>(row)).transpose();
    }
    return {{"n_states", S},
            {"n_actions", A},
            {"discount", mdp.discount()},
            {"mu0", array(mdp.initial_distribution())},
            {"transition", nested(flat, S, A)}};
}

TabularMdp mdp_from_json(const json& j, const std::string& path) {
    const std::size_t S = count(field(j, "n_states", path), path + ".n_states");
    const std::size_t A = count(field(j, "n_actions", path), path + ".n_actions");
    const double discount = number(field(j, "discount", path), path + ".discount");
    Eigen::VectorXd mu0 = vector(field(j, "mu0", path), S, path + ".mu0");
    const Eigen::VectorXd flat = tensor(field(j, "transition", path), S, A, path + ".transition");
    Eigen::MatrixXd transition(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(S));
    for (std::size_t row = 0; row < S * A; ++row) {
        transition.row(static_cast<Eigen::Index>(row)) =
            flat.segment(static_cast<Eigen::Index>(row * S), static_cast<Eigen::Index>(S)).transpose();
    }
    return at_path(path, [&] { return TabularMdp(S, A, std::move(transition), std::move(mu0), discount); });
}

json to_json(const RewardFunction& reward) {
    return {{"values", nested(reward.values(), reward.n_states(), reward.n_actions())}};
}

RewardFunction reward_from_json(const json& j, const std::string& path) {
    const json& values = field(j, "values", path);
    const std::string vpath = path + ".values";
    if (!values.is_array() || values.empty()) fail(vpath, "expected a non-empty array of states");
    if (!values[0].is_array() || values[0].empty()) fail(vpath + "[0]", "expected a non-empty array of actions");
    const std::size_t S = values.size();
    const std::size_t A = values[0].size();
    Eigen::VectorXd flat = tensor(values, S, A, vpath);
    return at_path(path, [&] { return RewardFunction(S, A, std::move(flat)); });
}

json to_json(const Policy& policy) {
    json out = json::array();
    for (Eigen::Index s = 0; s < policy.probs().rows(); ++s) out.push_back(array(policy.probs().row(s).transpose()));
    return out;
}

Policy policy_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of states");
    if (!j[0].is_array() || j[0].empty()) fail(path + "[0]", "expected a non-empty array of actions");
    const std::size_t S = j.size();
    const std::size_t A = j[0].size();
    Eigen::MatrixXd probs(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s) {
        probs.row(static_cast<Eigen::Index>(s)) = vector(j[s], A, path + "[" + std::to_string(s) + "]").transpose();
    }
    return at_path(path, [&] { return Policy(std::move(probs)); });
}

json to_json(const PotentialFunction& potential) { return array(potential.phi); }

json to_json(const TransformChain& chain) {
    json out = json::array();
    for (const auto& s : chain) {
        std::visit(
            [&](const auto& st) {
                using T = std::decay_t<decltype(st)>;
                if constexpr (std::is_same_v<T, step::Shaping>) {
                    out.push_back({{"kind", "shaping"}, {"phi", array(st.potential.phi)}});
                } else if constexpr (std::is_same_v<T, step::Scale>) {
                    out.push_back({{"kind", "scale"}, {"c", st.c}});
                } else {
                    out.push_back({{"kind", step_kind(s)}, {"delta", to_json(st.delta)["values"]}});
                }
            },
            s);
    }
    return out;
}

TransformChain chain_from_json(const json& j, std::size_t S, std::size_t A, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of steps");
    TransformChain chain;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const json& kind_json = field(j[i], "kind", p);
        if (!kind_json.is_string()) fail(p + ".kind", "expected a string");
        const std::string kind = kind_json.get<std::string>();
        if (kind == "shaping") {
            chain.emplace_back(step::Shaping{PotentialFunction{vector(field(j[i], "phi", p), S, p + ".phi")}});
        } else if (kind == "scale") {
            const double c = number(field(j[i], "c", p), p + ".c");
            if (!(c > 0.0)) fail(p + ".c", "scale must be positive");
            chain.emplace_back(step::Scale{c});
        } else if (kind == "redistribution" || kind == "nudge") {
            RewardFunction delta(S, A, tensor(field(j[i], "delta", p), S, A, p + ".delta"));
            if (kind == "nudge") {
                chain.emplace_back(step::Nudge{std::move(delta)});
            } else {
                chain.emplace_back(step::Redistribution{std::move(delta)});
            }
        } else {
            fail(p + ".kind", "unknown step kind '" + kind + "'");
        }
    }
    return chain;
}

json model_params_to_json(const BehavioralModelSpec& spec) {
    json out{{"kind", to_string(spec.kind)}};
    switch (spec.kind) {
        case ModelKind::optimal_uniform:
            if (spec.kappa) out["kappa"] = *spec.kappa;
            break;
        case ModelKind::boltzmann: out["beta"] = spec.parameter; break;
        case ModelKind::mce: out["alpha"] = spec.parameter; break;
    }
    return out;
}

BehavioralModelSpec model_from_json(const json& j, TabularMdp environment, const std::string& path) {
    const json& kind_json = field(j, "kind", path);
    if (!kind_json.is_string()) fail(path + ".kind", "expected a string");
    const ModelKind kind = at_path(path + ".kind", [&] { return model_kind_from_string(kind_json.get<std::string>()); });
    switch (kind) {
        case ModelKind::optimal_uniform: {
            std::optional<double> kappa;
            if (j.contains("kappa")) kappa = number(j["kappa"], path + ".kappa");
            return at_path(path, [&] { return BehavioralModelSpec::optimal(std::move(environment), kappa); });
        }
        case ModelKind::boltzmann: {
            const double beta = number(field(j, "beta", path), path + ".beta");
            return at_path(path + ".beta", [&] { return BehavioralModelSpec::boltzmann(std::move(environment), beta); });
        }
        case ModelKind::mce: {
            const double alpha = number(field(j, "alpha", path), path + ".alpha");
            return at_path(path + ".alpha", [&] { return BehavioralModelSpec::mce(std::move(environment), alpha); });
        }
    }
    throw InternalError("unhandled model kind");
}

json to_json(const MetricReport& report) {
    return {{"distance", report.distance},
            {"canonical_norm_1", report.canonical_norm_1},
            {"canonical_norm_2", report.canonical_norm_2},
            {"cosine", report.cosine}};
}

json to_json(const RobustnessVerdict& verdict) {
    json violations = json::array();
    for (const auto& v : verdict.violations) {
        violations.push_back({{"condition", v.condition}, {"reward_ids", v.reward_ids}, {"measured", v.measured}});
    }
    return {{"robust", verdict.robust},
            {"epsilon", verdict.epsilon},
            {"eta", verdict.eta},
            {"violations", std::move(violations)}};
}

json to_json(const ModelTable& table) {
    json out = json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
        out.push_back({{"id", table.ids[i]}, {"policy", to_json(table.policies[i])}});
    }
    return out;
}

json to_json(const TransformationBoundReport& report) {
    json probes = json::array();
    for (const auto& p : report.probes) {
        probes.push_back({{"nudge_norm", p.nudge_norm},
                          {"nudge_bound", p.nudge_bound},
                          {"distance", p.distance},
                          {"nudge_ok", p.nudge_ok},
                          {"distance_ok", p.distance_ok}});
    }
    return {{"holds", report.holds}, {"epsilon", report.epsilon}, {"probes", std::move(probes)}};
}

json to_json(const CounterexampleCertificate& c) {
    return {{"scenario", to_string(c.scenario)},
            {"model", model_params_to_json(c.model)},
            {"model_env", to_json(c.model.environment)},
            {"evaluation_env", to_json(c.evaluation_env)},
            {"policy_metric", to_string(c.policy_metric)},
            {"r1", to_json(c.r1)},
            {"r2", to_json(c.r2)},
            {"policy_gap", c.policy_gap},
            {"starc_distance", c.starc_distance},
            {"policy_gap_limit", c.policy_gap_limit},
            {"distance_floor", c.distance_floor},
            {"parameters", c.parameters},
            {"description", c.description}};
}

CounterexampleCertificate certificate_from_json(const json& j, const std::string& path) {
    const json& scenario = field(j, "scenario", path);
    const json& metric = field(j, "policy_metric", path);
    if (!scenario.is_string()) fail(path + ".scenario", "expected a string");
    if (!metric.is_string()) fail(path + ".policy_metric", "expected a string");
    TabularMdp model_env = mdp_from_json(field(j, "model_env", path), path + ".model_env");
    std::map<std::string, double> parameters;
    const json& params = field(j, "parameters", path);
    if (!params.is_object()) fail(path + ".parameters", "expected an object");
    for (const auto& [k, v] : params.items()) parameters[k] = number(v, path + ".parameters." + k);
    const json& description = field(j, "description", path);
    if (!description.is_string()) fail(path + ".description", "expected a string");
    return {at_path(path + ".scenario", [&] { return scenario_from_string(scenario.get<std::string>()); }),
            model_from_json(field(j, "model", path), std::move(model_env), path + ".model"),
            mdp_from_json(field(j, "evaluation_env", path), path + ".evaluation_env"),
            at_path(path + ".policy_metric", [&] { return policy_metric_from_string(metric.get<std::string>()); }),
            reward_from_json(field(j, "r1", path), path + ".r1"),
            reward_from_json(field(j, "r2", path), path + ".r2"),
            number(field(j, "policy_gap", path), path + ".policy_gap"),
            number(field(j, "starc_distance", path), path + ".starc_distance"),
            number(field(j, "policy_gap_limit", path), path + ".policy_gap_limit"),
            number(field(j, "distance_floor", path), path + ".distance_floor"),
            std::move(parameters),
            description.get<std::string>()};
}

json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError(file.string() + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(file.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    if (file.empty() || file == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(file);
    if (!out) throw Error(file.string() + ": cannot open for writing");
    out << text;
    if (!out) throw Error(file.string() + ": write failed");
}

TabularMdp load_mdp(const std::filesystem::path& file) { return mdp_from_json(read_json_file(file), file.string()); }

RewardFunction load_reward(const std::filesystem::path& file) {
    return reward_from_json(read_json_file(file), file.string());
}

}  // namespace starclab::io
