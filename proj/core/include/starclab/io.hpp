#pragma once

#include "starclab/behavior.hpp"
#include "starclab/mdp.hpp"
#include "starclab/robustness.hpp"
#include "starclab/starc.hpp"
#include "starclab/transforms.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace starclab::io {

using nlohmann::json;

// Loaders throw ValidationError naming the first offending field path.

json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const json& j, const std::string& path = "$");

/// {"values": [s][a][s']}.
json to_json(const RewardFunction& reward);
RewardFunction reward_from_json(const json& j, const std::string& path = "$");

/// Row-major probability table.
json to_json(const Policy& policy);
Policy policy_from_json(const json& j, const std::string& path = "$");

json to_json(const PotentialFunction& potential);

/// Tagged list: {"kind":"shaping","phi":[..]}, {"kind":"scale","c":..}, {"kind":"redistribution"|"nudge","delta":..}.
json to_json(const TransformChain& chain);
TransformChain chain_from_json(const json& j, std::size_t n_states, std::size_t n_actions,
                               const std::string& path = "$");

/// {"kind":"boltzmann","beta":..}, {"kind":"mce","alpha":..}, {"kind":"optimal","kappa":..}.
json model_params_to_json(const BehavioralModelSpec& spec);
BehavioralModelSpec model_from_json(const json& j, TabularMdp environment, const std::string& path = "$");

json to_json(const MetricReport& report);
json to_json(const RobustnessVerdict& verdict);
json to_json(const ModelTable& table);
json to_json(const TransformationBoundReport& report);

/// Full certificate with MDPs embedded by value.
json to_json(const CounterexampleCertificate& certificate);
CounterexampleCertificate certificate_from_json(const json& j, const std::string& path = "$");

json read_json_file(const std::filesystem::path& file);
/// Writes `text` to `file`, or to stdout when the path is "-" or empty.
void write_text(const std::filesystem::path& file, const std::string& text);

TabularMdp load_mdp(const std::filesystem::path& file);
RewardFunction load_reward(const std::filesystem::path& file);

}  // namespace starclab::io
