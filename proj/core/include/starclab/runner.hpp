#pragma once

#include "starclab/io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace starclab {

inline constexpr const char* kReportSchema = "starclab.report/1";

enum class ReportFormat { json, csv };

ReportFormat report_format_from_string(const std::string& name);

/// Where an environment comes from: a JSON file, a seeded generator, or a named built-in instance.
struct EnvironmentSource {
    std::optional<std::string> file;
    std::optional<std::string> preset;  // chain3, differing-row-model, differing-row-eval
    std::uint64_t seed = 0;
    std::size_t n_states = 4;
    std::size_t n_actions = 2;
    double concentration = 1.0;
    double discount = 0.9;
};

struct RewardSource {
    std::vector<std::string> files;
    /// Seeded N(0, scale^2) rewards used when no files are given.
    std::size_t count = 0;
    std::uint64_t seed = 0;
    double scale = 1.0;
};

struct Tolerances {
    double eta = 1e-6;
    double tol_dp = 1e-10;
};

/**
 * Kinds: starc-distance, distance-matrix, models-eval, robustness-check, counterexample-gamma,
 * counterexample-tau, counterexample-perturb, counterexample-optimality, gridworld-demo,
 * oracle-same-order.
 */
struct ExperimentConfig {
    std::string kind;
    EnvironmentSource environment;
    std::optional<EnvironmentSource> evaluation_environment;
    RewardSource rewards;
    io::json model = {{"kind", "boltzmann"}, {"beta", 1.0}};
    io::json model_g = io::json();
    std::string policy_metric = "l2";
    Tolerances tolerances;
    std::uint64_t seed = 0;
    ReportFormat format = ReportFormat::json;
    /// Scenario scalars: gamma1, gamma2, delta, c, epsilon, n.
    std::map<std::string, double> parameters;

    double parameter(const std::string& name, double fallback) const;
};

/// ValidationError with the field path for malformed configs or missing files.
ExperimentConfig config_from_json(const io::json& j);
io::json to_json(const ExperimentConfig& config);

struct Report {
    std::string schema = kReportSchema;
    io::json config;
    std::string status = "ok";
    std::optional<std::string> error;
    bool partial = false;
    io::json results = io::json::object();
    /// Flat scalar rows for CSV: one per reward pair or certificate.
    io::json rows = io::json::array();
    double elapsed_seconds = 0.0;
};

io::json to_json(const Report& report);
Report report_from_json(const io::json& j);
/// The report with its timing fields removed, for reproducibility comparisons.
io::json reproducible_part(const Report& report);

/// Runs one experiment. Config errors throw ValidationError; pipeline errors are recorded in the report.
Report run_experiment(const ExperimentConfig& config);

std::string render_report(const Report& report, ReportFormat format);
void emit_report(const Report& report, ReportFormat format, const std::filesystem::path& path);

TabularMdp load_environment(const EnvironmentSource& source, const std::string& path = "$.environment");
std::vector<NamedReward> load_rewards(const RewardSource& source, const TabularMdp& mdp,
                                      const std::string& path = "$.rewards");

}  // namespace starclab
