#include "tua/harness/eval.hpp"

#include <cmath>
#include <exception>
#include <numeric>

#include "tua/baselines.hpp"
#include "tua/error.hpp"

namespace tua::harness {

const MethodSummary& EvalSummary::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.method == name) return m;
  throw Error("no method '" + name + "' in summary");
}

std::pair<double, double> mean_ci95(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, 1.96 * std::sqrt(sq / (n - 1.0)) / std::sqrt(n)};
}

DeploymentScore evaluate_deployment(const PolicyNetwork& policy, const EnvConfig& env, std::size_t k,
                                    const EvalOptions& options, std::size_t index) {
  Rng dep_rng = make_stream(options.seed, {index, kDeploymentStream});
  const Deployment deployment = generate_deployment(env.network, k, dep_rng);
  Environment e(env, derive_seed(options.seed, {index, kChannelStream}));
  std::vector<Observation> obs = e.reset(deployment);

  const AssociationProblem plan = e.planning_problem();
  const Matrix snr = snr_grid(e.deployment(), e.topology(), env.radio, expected_channel(e.channel().shadowing));
  const auto maxsnr = max_snr(plan, snr);
  const auto heur = centralized_heuristic(plan, snr);

  Rng act_rng = make_stream(options.seed, {index, kActionStream});
  DeploymentScore score;
  score.index = index;
  for (int t = 0; t < options.steps; ++t) {
    const PolicyOutput out = policy.forward(policy.step_batch(obs));
    std::vector<BsId> actions(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j)
      actions[j] = options.greedy ? greedy_action(out.probs.row(j)) : sample_action(out.probs.row(j), act_rng);
    StepResult res = e.step(actions, out.probs);
    score.policy += res.reward;
    score.max_snr += e.score(maxsnr.assignment);
    score.heuristic += e.score(heur.assignment);
    score.collisions += res.resolution.collisions;
    obs = std::move(res.observations);
  }
  const double steps = static_cast<double>(std::max(options.steps, 1));
  score.policy /= steps;
  score.max_snr /= steps;
  score.heuristic /= steps;
  return score;
}

namespace {

EvalSummary summarize(std::vector<DeploymentScore> scores, const EnvConfig& env, std::size_t k,
                      const EvalOptions& options) {
  EvalSummary s;
  s.k = k;
  s.n_i = env.network.beam_budget.empty() ? 0 : env.network.beam_budget.front();
  s.per_deployment = std::move(scores);
  const auto add = [&](const std::string& name, double DeploymentScore::*field) {
    std::vector<double> v;
    v.reserve(s.per_deployment.size());
    for (const auto& d : s.per_deployment) v.push_back(d.*field);
    const auto [mean, ci] = mean_ci95(v);
    s.methods.push_back({name, k, s.n_i, env.alpha, to_string(env.traffic.mode), mean, ci, v.size(), options.seed});
  };
  add("policy", &DeploymentScore::policy);
  add("max_snr", &DeploymentScore::max_snr);
  add("heuristic", &DeploymentScore::heuristic);
  return s;
}

}  // namespace

EvalSummary evaluate(const PolicyNetwork& policy, const EnvConfig& env, std::size_t k, const EvalOptions& options) {
  std::vector<DeploymentScore> scores(options.deployments);
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(options.deployments);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      scores[static_cast<std::size_t>(i)] = evaluate_deployment(policy, env, k, options, static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(tua_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return summarize(std::move(scores), env, k, options);
}

EvalSummary evaluate_serial(const PolicyNetwork& policy, const EnvConfig& env, std::size_t k,
                            const EvalOptions& options) {
  std::vector<DeploymentScore> scores;
  scores.reserve(options.deployments);
  for (std::size_t i = 0; i < options.deployments; ++i)
    scores.push_back(evaluate_deployment(policy, env, k, options, i));
  return summarize(std::move(scores), env, k, options);
}

std::vector<EvalSummary> run_transfer_eval(const PolicyNetwork& policy, const EnvConfig& env,
                                           std::span<const std::size_t> k_values, std::span<const int> beam_values,
                                           const EvalOptions& options) {
  const auto version = policy.params().version();
  const auto hash = nn::parameter_hash(policy.params());
  std::vector<EvalSummary> out;
  std::vector<int> beams(beam_values.begin(), beam_values.end());
  if (beams.empty()) beams.push_back(env.network.beam_budget.empty() ? 1 : env.network.beam_budget.front());
  for (int b : beams) {
    EnvConfig cfg = env;
    cfg.network.set_uniform_beams(b);
    for (std::size_t k : k_values) out.push_back(evaluate(policy, cfg, k, options));
  }
  if (policy.params().version() != version || nn::parameter_hash(policy.params()) != hash)
    throw Error("parameter store changed during zero-shot evaluation");
  return out;
}

OracleCheckReport oracle_check(std::size_t instances, std::uint64_t seed, std::size_t max_k) {
  if (max_k < 2) throw ConfigError("oracle check needs max_k >= 2");
  EnvConfig env;
  env.network = NetworkConfig::with_defaults(2, 50.0, 2);
  env.traffic.mode = TrafficMode::Poisson;
  OracleCheckReport report;
  for (std::size_t i = 0; i < instances; ++i) {
    OracleCase c;
    c.index = i;
    c.k = 2 + i % (max_k - 1);
    c.alpha = static_cast<double>(i % 2);
    env.alpha = c.alpha;
    Rng dep_rng = make_stream(seed, {i, kDeploymentStream});
    Environment e(env, derive_seed(seed, {i, kChannelStream}));
    e.reset(generate_deployment(env.network, c.k, dep_rng));
    const AssociationProblem problem = e.realized_problem();
    const Matrix snr = snr_grid(e.deployment(), e.topology(), env.radio, e.channel());
    c.max_snr = max_snr(problem, snr).utility.total;
    c.heuristic = centralized_heuristic(problem, snr).utility.total;
    c.oracle = exact_oracle(problem).value;
    const double tol = 1e-9 * std::max(1.0, std::abs(c.oracle));
    c.ordered = c.max_snr <= c.heuristic + tol && c.heuristic <= c.oracle + tol;
    report.ordered += c.ordered ? 1 : 0;
    report.within_95 += c.heuristic >= 0.95 * c.oracle ? 1 : 0;
    report.cases.push_back(c);
  }
  return report;
}

nn::GradCheckReport ppo_gradient_check(std::uint64_t seed, std::size_t coordinates, std::size_t width) {
  EnvConfig env;
  env.network = NetworkConfig::with_defaults(2, 50.0, 2);
  PolicyConfig pc;
  pc.n_sbs = env.network.n_sbs;
  pc.width = width;
  pc.region = env.network.region;
  PolicyNetwork policy(pc);
  Rng rng = make_stream(seed, {kInitStream});
  policy.initialize(rng);

  Rng dep_rng = make_stream(seed, {kDeploymentStream});
  Environment e(env, derive_seed(seed, {kChannelStream}));
  std::vector<Observation> obs = e.reset(generate_deployment(env.network, 3, dep_rng));
  // One step so rates, utility and acks are populated.
  const PolicyOutput first = policy.forward(policy.step_batch(obs));
  std::vector<BsId> acts(obs.size());
  for (std::size_t j = 0; j < obs.size(); ++j) acts[j] = sample_action(first.probs.row(j), rng);
  obs = e.step(acts, first.probs).observations;

  const PolicyOutput out = policy.forward(policy.step_batch(obs));
  const double ratios[] = {0.8, 1.2, 1.7};
  const double advantages[] = {0.7, -0.4, 1.3};
  std::vector<Experience> batch(obs.size());
  std::normal_distribution<double> noise(0.0, 0.5);
  for (std::size_t j = 0; j < obs.size(); ++j) {
    auto& x = batch[j];
    x.obs = obs[j];
    x.action = static_cast<BsId>(j % pc.n_actions());
    x.behavior_prob = out.probs(j, static_cast<std::size_t>(x.action)) / ratios[j % 3];
    x.advantage = advantages[j % 3];
    x.target = out.values[j] + noise(rng);
  }
  std::vector<const Experience*> ptrs;
  for (const auto& x : batch) ptrs.push_back(&x);

  HyperParams hp;
  nn::ParameterStore grads = policy.params().zeros_like();
  ppo_objective(policy, policy.params(), ptrs, hp, &grads);
  const nn::LossFn loss = [&](const nn::ParameterStore& p) { return ppo_objective(policy, p, ptrs, hp, nullptr).total; };
  nn::GradCheckOptions opts;
  opts.coordinates = coordinates;
  opts.seed = seed;
  return nn::gradient_check(loss, policy.params(), grads, opts);
}

nlohmann::json to_json(const MethodSummary& s) {
  return {{"method", s.method},
          {"k", s.k},
          {"n_i", s.n_i},
          {"alpha", s.alpha},
          {"traffic_mode", s.traffic_mode},
          {"mean_utility_bps", s.mean_utility_bps},
          {"ci95", s.ci95},
          {"deployments", s.deployments},
          {"seed", s.seed}};
}

nlohmann::json summary_rows(std::span<const EvalSummary> summaries) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : summaries)
    for (const auto& m : s.methods) rows.push_back(to_json(m));
  return rows;
}

}  // namespace tua::harness
