#include "tua/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tua/baselines.hpp"
#include "tua/error.hpp"

namespace tua {

void HyperParams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(eps_neg > 0.0) || eps_neg > eps_pos) throw ConfigError("clip factors must satisfy 0 < eps_neg <= eps_pos");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (epochs < 1 || minibatch < 1) throw ConfigError("epochs and minibatch must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (dropout_p0 < 0.0 || dropout_p0 > 1.0) throw ConfigError("dropout_p0 must lie in [0, 1]");
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be > 0");
}

AdvantageEstimate compute_advantage(double reward, double value, double next_value, double gamma, bool done) {
  AdvantageEstimate e;
  e.target = reward + (done ? 0.0 : gamma * next_value);
  e.advantage = e.target - value;
  return e;
}

double ppo_ratio(double p_new, double p_old) {
  if (!(p_old > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return p_new / p_old;
}

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double hysteretic_ppo_loss(double zeta, double advantage, double eps_neg, double eps_pos) {
  return std::min(zeta * advantage, clip(zeta, 1.0 - eps_neg, 1.0 + eps_pos) * advantage);
}

double hysteretic_ppo_loss_grad(double zeta, double advantage, double eps_neg, double eps_pos) {
  // The unclipped branch carries the gradient whenever it attains the min.
  const double clipped = clip(zeta, 1.0 - eps_neg, 1.0 + eps_pos) * advantage;
  return zeta * advantage <= clipped ? advantage : 0.0;
}

void RolloutBuffer::finalize(double gamma) {
  for (auto& e : items_) {
    const auto est = compute_advantage(e.reward, e.value, e.next_value, gamma, e.done);
    e.advantage = est.advantage;
    e.target = est.target;
  }
}

LossTerms ppo_objective(const PolicyNetwork& policy, const nn::ParameterStore& params,
                        std::span<const Experience* const> samples, const HyperParams& hyper,
                        nn::ParameterStore* grads) {
  LossTerms terms;
  if (samples.empty()) return terms;
  std::vector<const Observation*> obs(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) obs[s] = &samples[s]->obs;
  const PolicyBatch batch = policy.sample_batch(obs);
  PolicyTape tape;
  const PolicyOutput out = policy.forward(params, batch, grads ? &tape : nullptr);

  const std::size_t bsz = samples.size();
  std::vector<double> zeta(bsz);
  std::vector<char> used(bsz, 0);
  for (std::size_t s = 0; s < bsz; ++s) {
    const auto a = static_cast<std::size_t>(samples[s]->action);
    zeta[s] = ppo_ratio(out.probs(s, a), samples[s]->behavior_prob);
    used[s] = std::isfinite(zeta[s]) ? 1 : 0;
  }
  const auto m = static_cast<std::size_t>(std::count(used.begin(), used.end(), 1));
  terms.used = m;
  if (m == 0) return terms;

  std::vector<double> adv(bsz, 0.0);
  for (std::size_t s = 0; s < bsz; ++s) adv[s] = samples[s]->advantage;
  if (hyper.normalize_advantage && m > 1) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t s = 0; s < bsz; ++s)
      if (used[s]) mean += adv[s];
    mean /= static_cast<double>(m);
    for (std::size_t s = 0; s < bsz; ++s)
      if (used[s]) sq += (adv[s] - mean) * (adv[s] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(m)) + 1e-8;
    for (double& a : adv) a = (a - mean) / sd;
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  const std::size_t n_actions = out.probs.cols();
  Matrix d_logits(bsz, n_actions);
  std::vector<double> d_values(bsz, 0.0);
  for (std::size_t s = 0; s < bsz; ++s) {
    if (!used[s]) continue;
    const auto probs = out.probs.row(s);
    terms.entropy += entropy(probs);
    terms.actor -= hysteretic_ppo_loss(zeta[s], adv[s], hyper.eps_neg, hyper.eps_pos);
    const double err = out.values[s] - samples[s]->target;
    terms.critic += err * err;
    if (!grads) continue;
    const double g = hysteretic_ppo_loss_grad(zeta[s], adv[s], hyper.eps_neg, hyper.eps_pos);
    const auto a = static_cast<std::size_t>(samples[s]->action);
    // d(-surrogate)/d logit_i = -g * zeta * (1[i == a] - p_i)
    for (std::size_t i = 0; i < n_actions; ++i)
      d_logits(s, i) = -inv_m * g * zeta[s] * ((i == a ? 1.0 : 0.0) - probs[i]);
    d_values[s] = hyper.value_coef * 2.0 * err * inv_m;
  }
  terms.actor *= inv_m;
  terms.critic *= inv_m;
  terms.entropy *= inv_m;
  terms.total = terms.actor + hyper.value_coef * terms.critic;
  if (grads) policy.backward(params, batch, tape, d_logits, d_values, *grads);
  return terms;
}

UpdateStats update(RolloutBuffer& buffer, PolicyNetwork& policy, nn::Adam& optimizer, const HyperParams& hyper,
                   Rng& rng) {
  UpdateStats stats;
  if (buffer.empty()) return stats;
  auto items = buffer.items();
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::ParameterStore grads = policy.params().zeros_like();
  std::vector<const Experience*> mb;
  std::size_t batches = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += hyper.minibatch) {
      const std::size_t end = std::min(order.size(), start + hyper.minibatch);
      mb.clear();
      for (std::size_t i = start; i < end; ++i) mb.push_back(&items[order[i]]);
      grads.set_zero();
      const auto terms = ppo_objective(policy, policy.params(), mb, hyper, &grads);
      stats.skipped += mb.size() - terms.used;
      if (!std::isfinite(terms.total)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", minibatch starting " << start << ": actor=" << terms.actor
           << " critic=" << terms.critic << " params_version=" << policy.params().version();
        throw Error(os.str());
      }
      if (terms.used == 0) continue;
      stats.grad_norm = nn::clip_grad_norm(grads, hyper.grad_clip);
      optimizer.step(policy.params(), grads);
      ++stats.optimizer_steps;
      ++batches;
      stats.actor_loss += terms.actor;
      stats.critic_loss += terms.critic;
      stats.entropy += terms.entropy;
    }
  }
  if (batches > 0) {
    stats.actor_loss /= static_cast<double>(batches);
    stats.critic_loss /= static_cast<double>(batches);
    stats.entropy /= static_cast<double>(batches);
  }
  return stats;
}

Trainer::Trainer(TrainSetup setup, std::uint64_t seed)
    : setup_(std::move(setup)), seed_(seed), policy_(setup_.policy) {
  setup_.hyper.validate();
  setup_.env.network.validate();
  if (setup_.n_ue == 0) throw ConfigError("training needs at least one UE");
  Rng init = make_stream(seed_, {kInitStream});
  policy_.initialize(init);
  optimizer_ = nn::Adam(policy_.params(), {setup_.hyper.lr, setup_.hyper.adam_beta1, setup_.hyper.adam_beta2,
                                          setup_.hyper.adam_eps});
}

EpisodeMetrics Trainer::run_episode() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t ep = episode_++;
  const HyperParams& hp = setup_.hyper;

  Rng dep_rng = make_stream(seed_, {ep, kDeploymentStream});
  const Deployment deployment = generate_deployment(setup_.env.network, setup_.n_ue, dep_rng);
  Rng drop_rng = make_stream(seed_, {ep, kDropoutStream});
  const auto active = apply_dropout(setup_.n_ue, hp.mask_out_prob(), drop_rng);
  Environment env(setup_.env, derive_seed(seed_, {ep, kChannelStream}));
  std::vector<Observation> obs = env.reset(deployment, active);

  const AssociationProblem plan = env.planning_problem();
  const Matrix snr = snr_grid(env.deployment(), env.topology(), setup_.env.radio,
                              expected_channel(env.channel().shadowing));
  const auto maxsnr = max_snr(plan, snr);
  const auto heur = centralized_heuristic(plan, snr);

  Rng act_rng = make_stream(seed_, {ep, kActionStream});
  RolloutBuffer buffer;
  std::vector<Experience> pending;
  const std::uint64_t version = policy_.params().version();

  EpisodeMetrics m;
  m.episode = ep;
  m.seed = seed_;
  m.k = env.n_active();
  double entropy_sum = 0.0;
  std::size_t entropy_n = 0;
  double discount = 1.0;

  for (int t = 0; t < hp.horizon; ++t) {
    const PolicyBatch batch = policy_.step_batch(obs);
    const PolicyOutput out = policy_.forward(batch);
    for (auto& e : pending) {
      e.next_value = out.values[e.ue];
      buffer.push(std::move(e));
    }
    pending.clear();

    std::vector<BsId> actions(obs.size());
    for (std::size_t j = 0; j < obs.size(); ++j) {
      actions[j] = sample_action(out.probs.row(j), act_rng);
      entropy_sum += entropy(out.probs.row(j));
      ++entropy_n;
    }
    StepResult res = env.step(actions, out.probs);
    m.mean_reward += res.reward;
    m.heuristic_reward += env.score(heur.assignment);
    m.maxsnr_reward += env.score(maxsnr.assignment);
    m.collisions += res.resolution.collisions;
    m.discounted_return += discount * res.reward;
    discount *= hp.gamma;

    // The first transition starts from the all-MBS reset state and is not trained on.
    if (t > 0) {
      const bool done = t == hp.horizon - 1;
      for (std::size_t j = 0; j < obs.size(); ++j) {
        Experience e;
        e.obs = std::move(obs[j]);
        e.action = actions[j];
        e.behavior_prob = out.probs(j, static_cast<std::size_t>(actions[j]));
        e.reward = res.reward * hp.reward_scale;
        e.value = out.values[j];
        e.done = done;
        e.ue = j;
        e.version = version;
        if (done)
          buffer.push(std::move(e));
        else
          pending.push_back(std::move(e));
      }
    }
    obs = std::move(res.observations);
  }

  buffer.finalize(hp.gamma);
  Rng shuffle_rng = make_stream(seed_, {ep, kShuffleStream});
  const auto stats = update(buffer, policy_, optimizer_, hp, shuffle_rng);

  const double steps = static_cast<double>(hp.horizon);
  m.mean_reward /= steps;
  m.heuristic_reward /= steps;
  m.maxsnr_reward /= steps;
  m.r_d = reward_gap(m.mean_reward, m.heuristic_reward).absolute;
  m.policy_entropy = entropy_n ? entropy_sum / static_cast<double>(entropy_n) : 0.0;
  m.actor_loss = stats.actor_loss;
  m.critic_loss = stats.critic_loss;
  m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

TrainResult train(const TrainSetup& setup, std::size_t episodes, std::uint64_t seed, const EpisodeCallback& on_episode) {
  Trainer trainer(setup, seed);
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    metrics.push_back(trainer.run_episode());
    if (on_episode) on_episode(metrics.back(), trainer.policy());
  }
  return {trainer.policy(), std::move(metrics)};
}

}  // namespace tua
