#include "starclab/runner.hpp"

#include "starclab/errors.hpp"
#include "starclab/instances.hpp"
#include "starclab/oracles.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

namespace starclab {

using io::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(path + "." + key, "has the wrong type");
    }
}

double positive(double x, const std::string& path) {
    if (!(x > 0.0) || !std::isfinite(x)) fail(path, "must be a finite positive number");
    return x;
}

const std::set<std::string> kKinds = {"starc-distance",          "distance-matrix",      "models-eval",
                                      "robustness-check",        "counterexample-gamma", "counterexample-tau",
                                      "counterexample-perturb",  "counterexample-optimality",
                                      "gridworld-demo",          "oracle-same-order"};

EnvironmentSource env_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    EnvironmentSource src;
    if (j.contains("file")) {
        src.file = get_or<std::string>(j, "file", "", path);
        if (!std::filesystem::exists(*src.file)) fail(path + ".file", "file '" + *src.file + "' does not exist");
    }
    if (j.contains("preset")) src.preset = get_or<std::string>(j, "preset", "", path);
    if (src.file && src.preset) fail(path, "give either 'file' or 'preset', not both");
    src.seed = get_or<std::uint64_t>(j, "seed", src.seed, path);
    src.n_states = get_or<std::size_t>(j, "n_states", src.n_states, path);
    src.n_actions = get_or<std::size_t>(j, "n_actions", src.n_actions, path);
    src.concentration = positive(get_or<double>(j, "concentration", src.concentration, path), path + ".concentration");
    src.discount = get_or<double>(j, "discount", src.discount, path);
    if (!(src.discount > 0.0 && src.discount < 1.0)) fail(path + ".discount", "must lie in (0, 1)");
    if (src.n_states < 1) fail(path + ".n_states", "must be at least 1");
    if (src.n_actions < 1) fail(path + ".n_actions", "must be at least 1");
    if (src.preset && *src.preset != "chain3" && *src.preset != "differing-row-model" &&
        *src.preset != "differing-row-eval") {
        fail(path + ".preset", "unknown preset '" + *src.preset + "'");
    }
    return src;
}

json env_to_json(const EnvironmentSource& src) {
    json j{{"seed", src.seed},
           {"n_states", src.n_states},
           {"n_actions", src.n_actions},
           {"concentration", src.concentration},
           {"discount", src.discount}};
    if (src.file) j["file"] = *src.file;
    if (src.preset) j["preset"] = *src.preset;
    return j;
}

json rows_entry(const std::string& a, const std::string& b, const MetricReport& m) {
    return {{"r1", a},
            {"r2", b},
            {"distance", m.distance},
            {"cosine", m.cosine},
            {"canonical_norm_1", m.canonical_norm_1},
            {"canonical_norm_2", m.canonical_norm_2}};
}

json certificate_row(const CounterexampleCertificate& cert, const CertificateCheck& check) {
    json row{{"scenario", to_string(cert.scenario)},
             {"model", to_string(cert.model.kind)},
             {"policy_gap", cert.policy_gap},
             {"policy_gap_limit", cert.policy_gap_limit},
             {"starc_distance", cert.starc_distance},
             {"distance_floor", cert.distance_floor},
             {"valid", check.valid}};
    for (const auto& [k, v] : cert.parameters) row["param_" + k] = v;
    return row;
}

void add_certificate(Report& report, const CounterexampleCertificate& cert) {
    const CertificateCheck check = verify_certificate(cert);
    report.results["certificate"] = io::to_json(cert);
    report.results["check"] = {{"valid", check.valid},
                               {"policy_gap", check.policy_gap},
                               {"starc_distance", check.starc_distance},
                               {"policy_gap_error", check.policy_gap_error},
                               {"distance_error", check.distance_error}};
    report.rows.push_back(certificate_row(cert, check));
    if (!check.valid) {
        report.status = "error";
        report.error = "certificate failed re-verification";
    }
}

BehavioralModelSpec model_spec(const ExperimentConfig& config, const json& params, const TabularMdp& env,
                               const std::string& path) {
    BehavioralModelSpec spec = io::model_from_json(params, env, path);
    spec.solver.tolerance = config.tolerances.tol_dp;
    return spec;
}

void require_rewards(const std::vector<NamedReward>& rewards, std::size_t n, const std::string& kind) {
    if (rewards.size() < n) {
        fail("$.rewards", kind + " needs at least " + std::to_string(n) + " rewards, got " +
                              std::to_string(rewards.size()));
    }
}

// Parses and loads everything the experiment needs before any pipeline work starts.
struct Prepared {
    TabularMdp env;
    std::optional<TabularMdp> eval_env;
    std::vector<NamedReward> rewards;
};

Prepared prepare(const ExperimentConfig& config) {
    Prepared p{load_environment(config.environment), std::nullopt, {}};
    if (config.evaluation_environment) {
        p.eval_env = load_environment(*config.evaluation_environment, "$.evaluation_environment");
    }
    const bool needs_rewards = config.kind == "starc-distance" || config.kind == "distance-matrix" ||
                               config.kind == "models-eval" || config.kind == "robustness-check" ||
                               config.kind == "oracle-same-order";
    if (needs_rewards) p.rewards = load_rewards(config.rewards, p.env);
    if (config.kind == "starc-distance" || config.kind == "oracle-same-order") require_rewards(p.rewards, 2, config.kind);
    if (config.kind == "distance-matrix") require_rewards(p.rewards, 2, config.kind);
    if (config.kind == "models-eval" || config.kind == "robustness-check") require_rewards(p.rewards, 1, config.kind);
    if (config.kind == "counterexample-tau" && !p.eval_env) {
        fail("$.evaluation_environment", "counterexample-tau needs an evaluation environment");
    }
    if (config.kind == "robustness-check" && config.model_g.is_null()) {
        fail("$.model_g", "robustness-check needs a second model");
    }
    if (config.kind == "models-eval" || config.kind == "robustness-check" || config.kind == "counterexample-gamma" ||
        config.kind == "counterexample-tau" || config.kind == "counterexample-perturb") {
        model_spec(config, config.model, p.env, "$.model");
    }
    if (config.kind == "robustness-check") model_spec(config, config.model_g, p.env, "$.model_g");
    return p;
}

void run_pipeline(const ExperimentConfig& config, const Prepared& p, Report& report) {
    const std::string& kind = config.kind;
    if (kind == "starc-distance" || kind == "distance-matrix") {
        const StarcMetric metric(p.env);
        const std::size_t n = kind == "starc-distance" ? 2 : p.rewards.size();
        json matrix = json::array();
        std::vector<Eigen::VectorXd> units;
        std::vector<double> norms;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd c = metric.projector().canonical_coordinates(p.rewards[i].reward);
            norms.push_back(c.norm());
            units.push_back(c.norm() > metric.zero_tolerance() ? Eigen::VectorXd(c / c.norm())
                                                              : Eigen::VectorXd::Zero(c.size()));
        }
        for (std::size_t i = 0; i < n; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < n; ++j) {
                const MetricReport m{StarcMetric::distance_between(units[i], units[j]), norms[i], norms[j],
                                     units[i].dot(units[j])};
                row.push_back(m.distance);
                if (i < j) report.rows.push_back(rows_entry(p.rewards[i].id, p.rewards[j].id, m));
                if (kind == "starc-distance" && i == 0 && j == 1) report.results["metric"] = io::to_json(m);
            }
            matrix.push_back(std::move(row));
        }
        if (kind == "distance-matrix") {
            json ids = json::array();
            for (std::size_t i = 0; i < n; ++i) ids.push_back(p.rewards[i].id);
            report.results["ids"] = std::move(ids);
            report.results["matrix"] = std::move(matrix);
            report.results["pairs"] = report.rows.size();
        }
        return;
    }
    if (kind == "models-eval") {
        const BehavioralModelSpec spec = model_spec(config, config.model, p.env, "$.model");
        const ModelTable table = materialize_model(spec, p.rewards);
        json returns = json::object();
        for (std::size_t i = 0; i < table.size(); ++i) {
            const double j = policy_return(p.env, p.rewards[i].reward, table.policies[i]);
            returns[table.ids[i]] = j;
            report.rows.push_back({{"id", table.ids[i]}, {"model", to_string(spec.kind)}, {"return", j}});
        }
        report.results["model"] = io::model_params_to_json(spec);
        report.results["policies"] = io::to_json(table);
        report.results["returns"] = std::move(returns);
        return;
    }
    if (kind == "robustness-check") {
        const HypothesisSet hypotheses(p.rewards);
        const TabularMdp& eval = p.eval_env ? *p.eval_env : p.env;
        const ModelTable f = materialize_model(model_spec(config, config.model, p.env, "$.model"), p.rewards);
        report.results["f"] = io::to_json(f);
        const ModelTable g = materialize_model(model_spec(config, config.model_g, p.env, "$.model_g"), p.rewards);
        report.results["g"] = io::to_json(g);
        const double epsilon = config.parameter("epsilon", 0.0);
        const RobustnessVerdict verdict = check_epsilon_robust(f, g, hypotheses, eval, epsilon, config.tolerances.eta);
        const double eps_star = min_robust_epsilon(f, g, hypotheses, eval, config.tolerances.eta);
        report.results["verdict"] = io::to_json(verdict);
        report.results["min_robust_epsilon"] = std::isfinite(eps_star) ? json(eps_star) : json("inf");
        json row{{"robust", verdict.robust},
                 {"epsilon", epsilon},
                 {"violations", verdict.violations.size()},
                 {"min_robust_epsilon", std::isfinite(eps_star) ? json(eps_star) : json("inf")}};
        if (verdict.robust) {
            const bool lemma = two_epsilon_lemma_check(f, g, hypotheses, eval, epsilon, config.tolerances.eta);
            report.results["two_epsilon_lemma"] = lemma;
            row["two_epsilon_lemma"] = lemma;
        }
        report.rows.push_back(std::move(row));
        return;
    }
    if (kind == "counterexample-gamma") {
        const BehavioralModelSpec spec = model_spec(config, config.model, p.env, "$.model");
        add_certificate(report, discount_counterexample(p.env, config.parameter("gamma1", 0.9),
                                                        config.parameter("gamma2", 0.95), spec.kind, spec.parameter,
                                                        config.tolerances.eta, config.seed));
        return;
    }
    if (kind == "counterexample-tau") {
        const BehavioralModelSpec spec = model_spec(config, config.model, p.env, "$.model");
        add_certificate(report, transition_counterexample(p.env, *p.eval_env, spec.kind, spec.parameter,
                                                          config.tolerances.eta));
        return;
    }
    if (kind == "counterexample-perturb") {
        const BehavioralModelSpec spec = model_spec(config, config.model, p.env, "$.model");
        add_certificate(report, perturbation_counterexample(p.env, spec, config.parameter("c", 1.0),
                                                            config.parameter("delta", 1e-2),
                                                            policy_metric_from_string(config.policy_metric),
                                                            config.seed));
        return;
    }
    if (kind == "counterexample-optimality") {
        add_certificate(report, optimality_nonrobustness_witness(p.env, config.seed, 100, config.tolerances.eta));
        return;
    }
    if (kind == "gridworld-demo") {
        const double n = config.parameter("n", 3.0);
        if (!(n >= 2.0) || n != std::floor(n)) fail("$.parameters.n", "must be an integer of at least 2");
        const double alpha = config.model.is_object() && config.model.value("kind", "") == "mce"
                                 ? config.model.value("alpha", 1.0)
                                 : config.parameter("alpha", 1.0);
        const GridworldDemo demo = gridworld_demo(static_cast<std::size_t>(n), config.parameter("gamma", 0.9),
                                                  alpha, config.tolerances.eta);
        add_certificate(report, demo.certificate);
        report.results["description"] = demo.description;
        return;
    }
    if (kind == "oracle-same-order") {
        SameOrderOptions options;
        options.seed = config.seed;
        const SameOrderReport r = same_order_report(p.env, p.rewards[0].reward, p.rewards[1].reward, options);
        const MetricReport m = starc_distance(p.env, p.rewards[0].reward, p.rewards[1].reward);
        report.results["same_order"] = r.same_order;
        report.results["deterministic_pairs"] = r.deterministic_pairs;
        report.results["deterministic_disagreements"] = r.deterministic_disagreements;
        report.results["stochastic_pairs"] = r.stochastic_pairs;
        report.results["stochastic_disagreements"] = r.stochastic_disagreements;
        report.results["metric"] = io::to_json(m);
        json row = rows_entry(p.rewards[0].id, p.rewards[1].id, m);
        row["same_order"] = r.same_order;
        report.rows.push_back(std::move(row));
        return;
    }
    throw InternalError("unhandled experiment kind '" + kind + "'");
}

std::string csv_cell(const json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (const char ch : s) {
            if (ch == '"') quoted += '"';
            quoted += ch;
        }
        return quoted + "\"";
    }
    if (v.is_null()) return "";
    return v.dump();
}

}  // namespace

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    throw ValidationError("unknown format '" + name + "' (expected json or csv)");
}

double ExperimentConfig::parameter(const std::string& name, double fallback) const {
    const auto it = parameters.find(name);
    return it == parameters.end() ? fallback : it->second;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) fail("$", "expected an object");
    ExperimentConfig c;
    if (!j.contains("kind") || !j["kind"].is_string()) fail("$.kind", "missing or not a string");
    c.kind = j["kind"].get<std::string>();
    if (!kKinds.count(c.kind)) fail("$.kind", "unknown experiment kind '" + c.kind + "'");
    if (j.contains("environment")) c.environment = env_from_json(j["environment"], "$.environment");
    if (j.contains("evaluation_environment")) {
        c.evaluation_environment = env_from_json(j["evaluation_environment"], "$.evaluation_environment");
    }
    if (j.contains("rewards")) {
        const json& r = j["rewards"];
        if (!r.is_object()) fail("$.rewards", "expected an object");
        c.rewards.files = get_or<std::vector<std::string>>(r, "files", {}, "$.rewards");
        for (std::size_t i = 0; i < c.rewards.files.size(); ++i) {
            if (!std::filesystem::exists(c.rewards.files[i])) {
                fail("$.rewards.files[" + std::to_string(i) + "]", "file '" + c.rewards.files[i] + "' does not exist");
            }
        }
        c.rewards.count = get_or<std::size_t>(r, "count", 0, "$.rewards");
        c.rewards.seed = get_or<std::uint64_t>(r, "seed", 0, "$.rewards");
        c.rewards.scale = positive(get_or<double>(r, "scale", 1.0, "$.rewards"), "$.rewards.scale");
    }
    if (j.contains("model")) {
        if (!j["model"].is_object()) fail("$.model", "expected an object");
        c.model = j["model"];
    }
    if (j.contains("model_g")) {
        if (!j["model_g"].is_object()) fail("$.model_g", "expected an object");
        c.model_g = j["model_g"];
    }
    c.policy_metric = get_or<std::string>(j, "policy_metric", c.policy_metric, "$");
    try {
        policy_metric_from_string(c.policy_metric);
    } catch (const ValidationError& e) {
        fail("$.policy_metric", e.what());
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) fail("$.tolerances", "expected an object");
        c.tolerances.eta = positive(get_or<double>(t, "eta", c.tolerances.eta, "$.tolerances"), "$.tolerances.eta");
        c.tolerances.tol_dp =
            positive(get_or<double>(t, "tol_dp", c.tolerances.tol_dp, "$.tolerances"), "$.tolerances.tol_dp");
    }
    c.seed = get_or<std::uint64_t>(j, "seed", 0, "$");
    const std::string format = get_or<std::string>(j, "format", "json", "$");
    try {
        c.format = report_format_from_string(format);
    } catch (const ValidationError& e) {
        fail("$.format", e.what());
    }
    if (j.contains("parameters")) {
        const json& params = j["parameters"];
        if (!params.is_object()) fail("$.parameters", "expected an object");
        for (const auto& [k, v] : params.items()) {
            if (!v.is_number()) fail("$.parameters." + k, "expected a number");
            c.parameters[k] = v.get<double>();
        }
    }
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j{{"kind", c.kind},
           {"environment", env_to_json(c.environment)},
           {"rewards",
            {{"files", c.rewards.files}, {"count", c.rewards.count}, {"seed", c.rewards.seed}, {"scale", c.rewards.scale}}},
           {"model", c.model},
           {"policy_metric", c.policy_metric},
           {"tolerances", {{"eta", c.tolerances.eta}, {"tol_dp", c.tolerances.tol_dp}}},
           {"seed", c.seed},
           {"format", c.format == ReportFormat::json ? "json" : "csv"},
           {"parameters", c.parameters}};
    if (c.evaluation_environment) j["evaluation_environment"] = env_to_json(*c.evaluation_environment);
    if (!c.model_g.is_null()) j["model_g"] = c.model_g;
    return j;
}

TabularMdp load_environment(const EnvironmentSource& src, const std::string& path) {
    if (src.file) {
        try {
            return io::load_mdp(*src.file);
        } catch (const ValidationError& e) {
            fail(path + ".file", e.what());
        }
    }
    if (src.preset) {
        if (*src.preset == "chain3") return three_state_chain(src.discount);
        if (*src.preset == "differing-row-model") return differing_row_environments(src.discount).first;
        if (*src.preset == "differing-row-eval") return differing_row_environments(src.discount).second;
        fail(path + ".preset", "unknown preset '" + *src.preset + "'");
    }
    return random_mdp(src.seed, src.n_states, src.n_actions, src.concentration, src.discount);
}

std::vector<NamedReward> load_rewards(const RewardSource& src, const TabularMdp& mdp, const std::string& path) {
    std::vector<NamedReward> out;
    for (std::size_t i = 0; i < src.files.size(); ++i) {
        const std::string p = path + ".files[" + std::to_string(i) + "]";
        RewardFunction r = [&] {
            try {
                return io::load_reward(src.files[i]);
            } catch (const ValidationError& e) {
                fail(p, e.what());
            }
        }();
        try {
            r.check_shape(mdp);
        } catch (const ValidationError& e) {
            fail(p, e.what());
        }
        out.push_back({std::filesystem::path(src.files[i]).stem().string(), std::move(r)});
    }
    if (src.files.empty()) {
        for (std::size_t i = 0; i < src.count; ++i) {
            out.push_back({"R" + std::to_string(i),
                           random_reward(src.seed * 1000003 + i, mdp.n_states(), mdp.n_actions(), src.scale)});
        }
    }
    std::set<std::string> seen;
    for (const auto& r : out) {
        if (!seen.insert(r.id).second) fail(path, "duplicate reward id '" + r.id + "'");
    }
    return out;
}

Report run_experiment(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    Report report;
    report.config = to_json(config);
    const Prepared prepared = prepare(config);
    try {
        run_pipeline(config, prepared, report);
    } catch (const Error& e) {
        report.status = "error";
        report.error = e.what();
        report.partial = true;
    }
    report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

json to_json(const Report& report) {
    json j = reproducible_part(report);
    j["timings"] = {{"elapsed_seconds", report.elapsed_seconds}};
    return j;
}

json reproducible_part(const Report& report) {
    json j{{"schema", report.schema},
           {"config", report.config},
           {"status", report.status},
           {"partial", report.partial},
           {"results", report.results},
           {"rows", report.rows}};
    j["error"] = report.error ? json(*report.error) : json();
    return j;
}

Report report_from_json(const json& j) {
    Report r;
    try {
        r.schema = j.at("schema").get<std::string>();
        r.config = j.at("config");
        r.status = j.at("status").get<std::string>();
        if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
        r.partial = j.at("partial").get<bool>();
        r.results = j.at("results");
        r.rows = j.at("rows");
        r.elapsed_seconds = j.at("timings").at("elapsed_seconds").get<double>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
    if (r.schema != kReportSchema) throw ValidationError("unsupported report schema '" + r.schema + "'");
    return r;
}

std::string render_report(const Report& report, ReportFormat format) {
    if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";
    std::set<std::string> columns;
    for (const auto& row : report.rows) {
        for (const auto& [k, v] : row.items()) columns.insert(k);
    }
    std::ostringstream out;
    bool first = true;
    for (const auto& c : columns) {
        out << (first ? "" : ",") << c;
        first = false;
    }
    out << "\n";
    for (const auto& row : report.rows) {
        first = true;
        for (const auto& c : columns) {
            out << (first ? "" : ",") << (row.contains(c) ? csv_cell(row[c]) : "");
            first = false;
        }
        out << "\n";
    }
    return out.str();
}

void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path) {
    io::write_text(path, render_report(report, format));
}

}  // namespace starclab
