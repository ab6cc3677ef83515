#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tua/harness/config.hpp"
#include "tua/policy.hpp"

namespace tua::harness {

struct DeploymentScore {
  std::size_t index = 0;
  double policy = 0.0;
  double max_snr = 0.0;
  double heuristic = 0.0;
  std::size_t collisions = 0;
};

struct MethodSummary {
  std::string method;
  std::size_t k = 0;
  int n_i = 0;
  double alpha = 0.0;
  std::string traffic_mode;
  double mean_utility_bps = 0.0;
  double ci95 = 0.0;
  std::size_t deployments = 0;
  std::uint64_t seed = 0;
};

struct EvalSummary {
  std::size_t k = 0;
  int n_i = 0;
  std::vector<DeploymentScore> per_deployment;
  std::vector<MethodSummary> methods;  // policy, max_snr, heuristic

  const MethodSummary& method(const std::string& name) const;
};

// Mean and 1.96 * sd / sqrt(n).
std::pair<double, double> mean_ci95(std::span<const double> values);

// One deployment: the policy acts for `options.steps` steps; max-SNR and the
// heuristic are planned once on the expected channel and scored on the same
// per-step draws. Never modifies the policy.
DeploymentScore evaluate_deployment(const PolicyNetwork& policy, const EnvConfig& env, std::size_t k,
                                    const EvalOptions& options, std::size_t index);

// Deployments fan out over OpenMP threads; results are reduced in index order.
EvalSummary evaluate(const PolicyNetwork& policy, const EnvConfig& env, std::size_t k, const EvalOptions& options);
EvalSummary evaluate_serial(const PolicyNetwork& policy, const EnvConfig& env, std::size_t k,
                            const EvalOptions& options);

// Zero-shot sweep over UE counts and uniform beam budgets. Throws Error if the
// parameter store changed during evaluation.
std::vector<EvalSummary> run_transfer_eval(const PolicyNetwork& policy, const EnvConfig& env,
                                           std::span<const std::size_t> k_values, std::span<const int> beam_values,
                                           const EvalOptions& options);

struct OracleCase {
  std::size_t index = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  double max_snr = 0.0;
  double heuristic = 0.0;
  double oracle = 0.0;
  bool ordered = false;  // max_snr <= heuristic <= oracle
};

struct OracleCheckReport {
  std::vector<OracleCase> cases;
  std::size_t ordered = 0;
  std::size_t within_95 = 0;  // heuristic >= 0.95 oracle
};

// Random tiny instances (K in [2, max_k], N_s = 2, N_i = 2, alpha alternating
// 0 and 1) scored on their realized channel by all three solvers.
OracleCheckReport oracle_check(std::size_t instances, std::uint64_t seed, std::size_t max_k = 6);

// Finite-difference check of the full PPO loss on a 3-UE batch taken from a
// live environment step; ratios are placed away from the clip kinks.
nn::GradCheckReport ppo_gradient_check(std::uint64_t seed, std::size_t coordinates = 200, std::size_t width = 16);

nlohmann::json to_json(const MethodSummary& s);
nlohmann::json summary_rows(std::span<const EvalSummary> summaries);

}  // namespace tua::harness
