#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tua/env.hpp"
#include "tua/nn.hpp"
#include "tua/policy.hpp"

namespace tua {

struct HyperParams {
  double lr = 1e-4;
  double gamma = 0.6;
  double eps_neg = 0.01;  // clip for ratio < 1
  double eps_pos = 0.5;   // clip for ratio > 1
  int horizon = 250;      // T_e
  double dropout_p0 = 0.95;
  bool dropout_p0_is_keep = true;
  int epochs = 4;
  std::size_t minibatch = 64;
  double value_coef = 0.5;
  double grad_clip = 10.0;  // <= 0 disables
  bool normalize_advantage = false;
  double reward_scale = 1e-9;  // learner-side reward units (bps -> Gbps)
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  double mask_out_prob() const { return dropout_p0_is_keep ? 1.0 - dropout_p0 : dropout_p0; }
  void validate() const;
};

struct AdvantageEstimate {
  double advantage = 0.0;
  double target = 0.0;
};

// One-step TD: target = r + gamma V(s') (1 - done), advantage = target - V(s).
AdvantageEstimate compute_advantage(double reward, double value, double next_value, double gamma, bool done);

// p_new / p_old; NaN when p_old <= 0 (the sample is then skipped).
double ppo_ratio(double p_new, double p_old);

double clip(double x, double lo, double hi);

// min(zeta A, clip(zeta, 1 - eps_neg, 1 + eps_pos) A)
double hysteretic_ppo_loss(double zeta, double advantage, double eps_neg, double eps_pos);

// d surrogate / d zeta
double hysteretic_ppo_loss_grad(double zeta, double advantage, double eps_neg, double eps_pos);

struct Experience {
  Observation obs;
  BsId action = kMacroBs;
  double behavior_prob = 0.0;
  double reward = 0.0;  // scaled
  double value = 0.0;
  double next_value = 0.0;
  bool done = false;
  std::size_t ue = 0;
  std::uint64_t version = 0;
  double advantage = 0.0;
  double target = 0.0;
};

class RolloutBuffer {
 public:
  void push(Experience e) { items_.push_back(std::move(e)); }
  void clear() { items_.clear(); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::span<Experience> items() { return items_; }
  std::span<const Experience> items() const { return items_; }

  void finalize(double gamma);

 private:
  std::vector<Experience> items_;
};

struct LossTerms {
  double total = 0.0;
  double actor = 0.0;   // -mean surrogate
  double critic = 0.0;  // mean squared value error (before the coefficient)
  double entropy = 0.0;
  std::size_t used = 0;
};

// Total loss -mean(surrogate) + c_v mean((V - G)^2) over `samples` evaluated
// with `params`; accumulates its gradient into `grads` when non-null.
LossTerms ppo_objective(const PolicyNetwork& policy, const nn::ParameterStore& params,
                        std::span<const Experience* const> samples, const HyperParams& hyper,
                        nn::ParameterStore* grads);

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  std::size_t optimizer_steps = 0;
  std::size_t skipped = 0;
};

// Epochs of shuffled minibatch descent. Throws Error on a non-finite loss.
UpdateStats update(RolloutBuffer& buffer, PolicyNetwork& policy, nn::Adam& optimizer, const HyperParams& hyper,
                   Rng& rng);

struct EpisodeMetrics {
  std::size_t episode = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double mean_reward = 0.0;
  double heuristic_reward = 0.0;
  double r_d = 0.0;
  double maxsnr_reward = 0.0;
  double policy_entropy = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  std::size_t collisions = 0;
  double wall_ms = 0.0;
  double discounted_return = 0.0;  // G(0) of the shared reward
};

struct TrainSetup {
  EnvConfig env;
  PolicyConfig policy;
  HyperParams hyper;
  std::size_t n_ue = 15;
};

struct TrainResult {
  PolicyNetwork policy;
  std::vector<EpisodeMetrics> metrics;
};

using EpisodeCallback = std::function<void(const EpisodeMetrics&, const PolicyNetwork&)>;

// Episode loop: fresh deployment, dropout mask, T_e-step rollout under a
// frozen snapshot, one pooled update. Baselines are scored on the same draws.
class Trainer {
 public:
  Trainer(TrainSetup setup, std::uint64_t seed);

  EpisodeMetrics run_episode();
  const PolicyNetwork& policy() const { return policy_; }
  PolicyNetwork& policy() { return policy_; }
  std::size_t episodes_done() const { return episode_; }

 private:
  TrainSetup setup_;
  std::uint64_t seed_;
  PolicyNetwork policy_;
  nn::Adam optimizer_;
  std::size_t episode_ = 0;
};

TrainResult train(const TrainSetup& setup, std::size_t episodes, std::uint64_t seed,
                  const EpisodeCallback& on_episode = {});

}  // namespace tua
