// Command-line front end. Every subcommand builds an ExperimentConfig and hands it to the runner.

#include "starclab/acceptance.hpp"
#include "starclab/errors.hpp"
#include "starclab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using starclab::ExperimentConfig;
using starclab::io::json;

enum Exit { kOk = 0, kValidation = 1, kPipeline = 2, kAcceptance = 3 };

struct Globals {
    std::uint64_t seed = 0;
    std::string format = "json";
    std::string out = "-";
    double tol_policy = 1e-6;
    double tol_dp = 1e-10;
};

struct EnvOptions {
    std::string file;
    std::string preset;
    std::uint64_t seed = 0;
    std::size_t states = 4;
    std::size_t actions = 2;
    double concentration = 1.0;
    double discount = 0.9;
};

struct ModelOptions {
    std::string kind = "boltzmann";
    double beta = 1.0;
    double alpha = 1.0;
    std::optional<double> kappa;
};

void add_env_options(CLI::App* app, EnvOptions& env, const std::string& prefix = "") {
    const std::string p = prefix.empty() ? "--" : "--" + prefix + "-";
    app->add_option(p + "mdp", env.file, "MDP JSON file");
    app->add_option(p + "preset", env.preset, "Built-in environment: chain3, differing-row-model, differing-row-eval");
    app->add_option(p + "env-seed", env.seed, "Seed of the generated environment");
    app->add_option(p + "states", env.states, "States of the generated environment");
    app->add_option(p + "actions", env.actions, "Actions of the generated environment");
    app->add_option(p + "concentration", env.concentration, "Dirichlet concentration of generated rows");
    app->add_option(p + "discount", env.discount, "Discount factor");
}

void add_model_options(CLI::App* app, ModelOptions& model) {
    app->add_option("--model", model.kind, "optimal, boltzmann or mce")
        ->check(CLI::IsMember({"optimal", "boltzmann", "mce"}));
    app->add_option("--beta", model.beta, "Boltzmann inverse temperature");
    app->add_option("--alpha", model.alpha, "MCE entropy weight");
    app->add_option("--kappa", model.kappa, "Argmax tolerance of the optimal model");
}

json env_json(const EnvOptions& env) {
    json j{{"seed", env.seed},
           {"n_states", env.states},
           {"n_actions", env.actions},
           {"concentration", env.concentration},
           {"discount", env.discount}};
    if (!env.file.empty()) j["file"] = env.file;
    if (!env.preset.empty()) j["preset"] = env.preset;
    return j;
}

json model_json(const ModelOptions& m) {
    json j{{"kind", m.kind}};
    if (m.kind == "boltzmann") j["beta"] = m.beta;
    if (m.kind == "mce") j["alpha"] = m.alpha;
    if (m.kind == "optimal" && m.kappa) j["kappa"] = *m.kappa;
    return j;
}

json base_config(const std::string& kind, const Globals& g) {
    return {{"kind", kind},
            {"seed", g.seed},
            {"format", g.format},
            {"tolerances", {{"eta", g.tol_policy}, {"tol_dp", g.tol_dp}}}};
}

int run(const json& config_json, const Globals& g) {
    const ExperimentConfig config = starclab::config_from_json(config_json);
    const starclab::Report report = starclab::run_experiment(config);
    starclab::emit_report(report, config.format, g.out);
    if (report.status != "ok") {
        std::cerr << "error: " << report.error.value_or("pipeline failed") << "\n";
        return kPipeline;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"STARC reward distances, behavioural models and misspecification-robustness certificates"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_option("--out", g.out, "Output path, - for stdout")->capture_default_str();
    app.add_option("--tol-policy,--tol", g.tol_policy, "l_inf tolerance for policy equality")->capture_default_str();
    app.add_option("--tol-dp", g.tol_dp, "Dynamic-programming tolerance")->capture_default_str();

    std::function<int()> action;

    // run --config
    std::string config_file;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment from a JSON config");
    run_cmd->add_option("--config", config_file, "Experiment config")->required();
    run_cmd->callback([&] {
        action = [&] {
            json j = starclab::io::read_json_file(config_file);
            if (j.is_object() && !j.contains("format")) j["format"] = g.format;
            return run(j, g);
        };
    });

    // starc
    EnvOptions starc_env;
    std::string r1_file, r2_file;
    auto* starc_cmd = app.add_subcommand("starc", "STARC distance between two rewards");
    add_env_options(starc_cmd, starc_env);
    starc_cmd->add_option("--r1", r1_file, "First reward JSON")->required();
    starc_cmd->add_option("--r2", r2_file, "Second reward JSON")->required();
    starc_cmd->callback([&] {
        action = [&] {
            json c = base_config("starc-distance", g);
            c["environment"] = env_json(starc_env);
            c["rewards"] = {{"files", {r1_file, r2_file}}};
            return run(c, g);
        };
    });

    // models eval
    EnvOptions models_env;
    ModelOptions models_model;
    std::vector<std::string> models_rewards;
    std::size_t models_count = 0;
    auto* models_cmd = app.add_subcommand("models", "Behavioural models");
    models_cmd->require_subcommand(1);
    auto* eval_cmd = models_cmd->add_subcommand("eval", "Apply a model to a set of rewards");
    add_env_options(eval_cmd, models_env);
    add_model_options(eval_cmd, models_model);
    eval_cmd->add_option("--rewards", models_rewards, "Reward JSON files");
    eval_cmd->add_option("--random-rewards", models_count, "Number of seeded rewards when no files are given");
    eval_cmd->callback([&] {
        action = [&] {
            json c = base_config("models-eval", g);
            c["environment"] = env_json(models_env);
            c["rewards"] = {{"files", models_rewards}, {"count", models_count}, {"seed", g.seed}};
            c["model"] = model_json(models_model);
            return run(c, g);
        };
    });

    // robustness check
    EnvOptions rob_env;
    EnvOptions rob_eval_env;
    ModelOptions rob_f;
    std::string g_kind = "boltzmann";
    double g_param = 1.0;
    double rob_epsilon = 0.0;
    std::vector<std::string> rob_rewards;
    std::size_t rob_count = 0;
    auto* rob_cmd = app.add_subcommand("robustness", "Robustness checks");
    rob_cmd->require_subcommand(1);
    auto* check_cmd = rob_cmd->add_subcommand("check", "Check the four robustness conditions for models f and g");
    add_env_options(check_cmd, rob_env);
    add_env_options(check_cmd, rob_eval_env, "eval");
    add_model_options(check_cmd, rob_f);
    check_cmd->add_option("--g-model", g_kind, "Model g: optimal, boltzmann or mce")
        ->check(CLI::IsMember({"optimal", "boltzmann", "mce"}));
    check_cmd->add_option("--g-param", g_param, "beta or alpha of model g");
    check_cmd->add_option("--epsilon", rob_epsilon, "Robustness level");
    check_cmd->add_option("--rewards", rob_rewards, "Reward JSON files");
    check_cmd->add_option("--random-rewards", rob_count, "Number of seeded rewards when no files are given");
    check_cmd->callback([&] {
        action = [&] {
            json c = base_config("robustness-check", g);
            c["environment"] = env_json(rob_env);
            if (!rob_eval_env.file.empty() || !rob_eval_env.preset.empty()) {
                c["evaluation_environment"] = env_json(rob_eval_env);
            }
            c["rewards"] = {{"files", rob_rewards}, {"count", rob_count}, {"seed", g.seed}};
            c["model"] = model_json(rob_f);
            ModelOptions gm;
            gm.kind = g_kind;
            gm.beta = gm.alpha = g_param;
            c["model_g"] = model_json(gm);
            c["parameters"] = {{"epsilon", rob_epsilon}};
            return run(c, g);
        };
    });

    // counterexample {gamma|tau|perturb|optimality}
    auto* ce_cmd = app.add_subcommand("counterexample", "Construct and verify a counterexample certificate");
    ce_cmd->require_subcommand(1);
    EnvOptions ce_env;
    EnvOptions ce_eval_env;
    ModelOptions ce_model;
    double gamma1 = 0.9, gamma2 = 0.95, delta = 1e-2, c_norm = 1.0;
    std::string policy_metric = "l2";

    auto* gamma_cmd = ce_cmd->add_subcommand("gamma", "Discount misspecification");
    add_env_options(gamma_cmd, ce_env);
    add_model_options(gamma_cmd, ce_model);
    gamma_cmd->add_option("--gamma1", gamma1, "Discount of the model")->capture_default_str();
    gamma_cmd->add_option("--gamma2", gamma2, "Discount of the evaluation")->capture_default_str();
    gamma_cmd->callback([&] {
        action = [&] {
            json c = base_config("counterexample-gamma", g);
            c["environment"] = env_json(ce_env);
            c["model"] = model_json(ce_model);
            c["parameters"] = {{"gamma1", gamma1}, {"gamma2", gamma2}};
            return run(c, g);
        };
    });

    auto* tau_cmd = ce_cmd->add_subcommand("tau", "Transition misspecification");
    add_env_options(tau_cmd, ce_env);
    add_env_options(tau_cmd, ce_eval_env, "eval");
    add_model_options(tau_cmd, ce_model);
    tau_cmd->callback([&] {
        action = [&] {
            json c = base_config("counterexample-tau", g);
            c["environment"] = env_json(ce_env);
            c["evaluation_environment"] = env_json(ce_eval_env);
            c["model"] = model_json(ce_model);
            return run(c, g);
        };
    });

    auto* perturb_cmd = ce_cmd->add_subcommand("perturb", "Perturbation of a continuous model");
    add_env_options(perturb_cmd, ce_env);
    add_model_options(perturb_cmd, ce_model);
    perturb_cmd->add_option("--delta", delta, "Policy perturbation bound")->capture_default_str();
    perturb_cmd->add_option("--c", c_norm, "Norm of both rewards")->capture_default_str();
    perturb_cmd->add_option("--policy-metric", policy_metric, "l2, linf or occupancy_l2")->capture_default_str();
    perturb_cmd->callback([&] {
        action = [&] {
            json c = base_config("counterexample-perturb", g);
            c["environment"] = env_json(ce_env);
            c["model"] = model_json(ce_model);
            c["policy_metric"] = policy_metric;
            c["parameters"] = {{"delta", delta}, {"c", c_norm}};
            return run(c, g);
        };
    });

    auto* opt_cmd = ce_cmd->add_subcommand("optimality", "Two rewards the optimal model cannot tell apart");
    add_env_options(opt_cmd, ce_env);
    opt_cmd->callback([&] {
        action = [&] {
            json c = base_config("counterexample-optimality", g);
            c["environment"] = env_json(ce_env);
            return run(c, g);
        };
    });

    // gridworld-demo
    std::size_t grid_n = 3;
    double grid_gamma = 0.9, grid_alpha = 1.0;
    auto* grid_cmd = app.add_subcommand("gridworld-demo", "Slippery versus deterministic torus gridworld");
    grid_cmd->add_option("--n", grid_n, "Side length")->capture_default_str();
    grid_cmd->add_option("--gamma", grid_gamma, "Discount factor")->capture_default_str();
    grid_cmd->add_option("--alpha", grid_alpha, "MCE entropy weight")->capture_default_str();
    grid_cmd->callback([&] {
        action = [&] {
            json c = base_config("gridworld-demo", g);
            c["model"] = {{"kind", "mce"}, {"alpha", grid_alpha}};
            c["parameters"] = {{"n", grid_n}, {"gamma", grid_gamma}};
            return run(c, g);
        };
    });

    // oracle same-order
    EnvOptions oracle_env;
    std::string o1, o2;
    auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force oracles");
    oracle_cmd->require_subcommand(1);
    auto* same_cmd = oracle_cmd->add_subcommand("same-order", "Compare policy orderings by enumeration");
    add_env_options(same_cmd, oracle_env);
    same_cmd->add_option("--r1", o1, "First reward JSON")->required();
    same_cmd->add_option("--r2", o2, "Second reward JSON")->required();
    same_cmd->callback([&] {
        action = [&] {
            json c = base_config("oracle-same-order", g);
            c["environment"] = env_json(oracle_env);
            c["rewards"] = {{"files", {o1, o2}}};
            return run(c, g);
        };
    });

    // suite acceptance
    std::vector<int> criteria;
    auto* suite_cmd = app.add_subcommand("suite", "Property suites");
    suite_cmd->require_subcommand(1);
    auto* acc_cmd = suite_cmd->add_subcommand("acceptance", "Run the acceptance criteria");
    acc_cmd->add_option("--criterion", criteria, "Run only these criteria");
    acc_cmd->callback([&] {
        action = [&] {
            namespace acc = starclab::acceptance;
            const std::vector<int> ids = criteria.empty() ? acc::criterion_ids() : criteria;
            bool all = true;
            for (const int id : ids) {
                const acc::CriterionResult r = acc::run_criterion(id);
                std::cout << acc::format_line(r) << std::endl;
                all = all && r.passed;
            }
            return all ? kOk : kAcceptance;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }
    try {
        return action ? action() : kOk;
    } catch (const starclab::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kPipeline;
    }
}
