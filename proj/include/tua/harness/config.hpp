#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tua/learner.hpp"

namespace tua::harness {

struct EvalOptions {
  std::size_t deployments = 500;
  int steps = 50;        // environment steps per evaluated deployment
  bool greedy = false;   // argmax instead of sampling from the policy
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  TrainSetup train;
  EvalOptions eval;
};

// Defaults mirror the reference scenario: 3 SBSs, 15 UEs, reference radio values for
// both tiers, Poisson traffic, alpha = 0.
ExperimentConfig default_config();

// Reduced scenario used for desk-scale training: K = 6, N_s = 2, N_i = 2,
// alpha = 0, infinite demand, narrower encoders and shorter episodes.
ExperimentConfig reduced_config();

// INI document with [network] [mbs] [sbs] [traffic] [utility] [policy]
// [learning] [eval] sections; missing keys keep their defaults.
// Throws ConfigError when the file is missing or a value is malformed.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);
std::string to_ini(const ExperimentConfig& config);

// Keeps policy normalization and network fields consistent after edits.
void sync(ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);

TrafficMode parse_traffic_mode(const std::string& s);
std::string to_string(TrafficMode mode);

}  // namespace tua::harness
