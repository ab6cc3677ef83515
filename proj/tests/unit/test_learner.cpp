#include <gtest/gtest.h>

#include <cmath>

#include "tua/error.hpp"
#include "tua/learner.hpp"

using namespace tua;

namespace {

double vanilla_clip_surrogate(double z, double a, double eps) {
  const double c = z < 1 - eps ? 1 - eps : (z > 1 + eps ? 1 + eps : z);
  return std::min(z * a, c * a);
}

struct Toy {
  EnvConfig env;
  PolicyNetwork policy;
  std::vector<Experience> items;

  explicit Toy(std::uint64_t seed, std::size_t k = 4, int steps = 6) : policy(make_config()) {
    env.network = NetworkConfig::with_defaults(2, 50.0, 2);
    env.traffic.mode = TrafficMode::Infinite;
    Rng rng(seed);
    policy.initialize(rng);
    Environment e(env, seed);
    auto obs = e.reset(generate_deployment(env.network, k, rng));
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < steps; ++t) {
      const auto out = policy.forward(policy.step_batch(obs));
      std::vector<BsId> acts(k);
      for (std::size_t j = 0; j < k; ++j) acts[j] = sample_action(out.probs.row(j), rng);
      auto res = e.step(acts, out.probs);
      for (std::size_t j = 0; j < k; ++j) {
        Experience x;
        x.obs = obs[j];
        x.action = acts[j];
        x.behavior_prob = out.probs(j, static_cast<std::size_t>(acts[j]));
        x.reward = res.reward * 1e-9;
        x.value = out.values[j];
        x.next_value = 0.0;
        x.done = true;
        x.ue = j;
        items.push_back(std::move(x));
      }
      obs = std::move(res.observations);
    }
  }

  static PolicyConfig make_config() {
    PolicyConfig c;
    c.n_sbs = 2;
    c.width = 12;
    return c;
  }

  std::vector<const Experience*> ptrs() const {
    std::vector<const Experience*> p;
    for (const auto& x : items) p.push_back(&x);
    return p;
  }
};

}  // namespace

TEST(Advantage, Examples) {
  EXPECT_EQ(compute_advantage(1.0, 0.0, 0.0, 0.6, false).advantage, 1.0);
  EXPECT_NEAR(compute_advantage(0.0, 2.0, 2.0, 0.6, false).advantage, -0.8, 1e-15);
  const auto t = compute_advantage(3.0, 1.0, 100.0, 0.6, true);
  EXPECT_EQ(t.advantage, 2.0);
  EXPECT_EQ(t.target, 3.0);
}

TEST(Ratio, Examples) {
  EXPECT_EQ(ppo_ratio(0.3, 0.3), 1.0);
  EXPECT_EQ(ppo_ratio(0.4, 0.2), 2.0);
  EXPECT_TRUE(std::isnan(ppo_ratio(0.4, 0.0)));
}

TEST(Loss, SpecExamples) {
  EXPECT_EQ(hysteretic_ppo_loss(2.0, 1.0, 0.01, 0.5), 1.5);
  EXPECT_EQ(hysteretic_ppo_loss(0.5, -1.0, 0.01, 0.5), -0.99);
  for (double a : {-3.0, -0.1, 0.0, 0.7, 5.0}) EXPECT_EQ(hysteretic_ppo_loss(1.0, a, 0.01, 0.5), a);
}

TEST(Loss, VanillaRecoveryOnRandomGrid) {
  Rng rng(1);
  std::uniform_real_distribution<double> z(0.0, 3.0), a(-5.0, 5.0), e(0.01, 0.5);
  for (int i = 0; i < 10000; ++i) {
    const double zz = z(rng), aa = a(rng), ee = e(rng);
    EXPECT_EQ(hysteretic_ppo_loss(zz, aa, ee, ee), vanilla_clip_surrogate(zz, aa, ee));
  }
}

TEST(Loss, HysteresisBoundsNegativeUpdates) {
  Rng rng(2);
  std::uniform_real_distribution<double> z(0.0, 0.99), a(-5.0, -1e-3);
  for (int i = 0; i < 1000; ++i) {
    const double zz = z(rng), aa = a(rng);
    EXPECT_LE(std::abs(hysteretic_ppo_loss(zz, aa, 0.01, 0.5)), (1 - 0.01) * std::abs(aa) + 1e-15);
  }
}

TEST(Clip, MatchesDefinition) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), lo = u(rng), hi = lo + std::abs(u(rng));
    EXPECT_EQ(clip(x, lo, hi), std::min(std::max(x, lo), hi));
  }
}

TEST(LossGrad, MatchesFiniteDifferencesAwayFromKinks) {
  for (double z : {0.5, 0.9, 1.2, 1.7})
    for (double a : {-1.0, 1.0}) {
      const double h = 1e-7;
      const double fd = (hysteretic_ppo_loss(z + h, a, 0.01, 0.5) - hysteretic_ppo_loss(z - h, a, 0.01, 0.5)) / (2 * h);
      EXPECT_NEAR(hysteretic_ppo_loss_grad(z, a, 0.01, 0.5), fd, 1e-6);
    }
}

TEST(HyperParams, Validation) {
  HyperParams h;
  EXPECT_NO_THROW(h.validate());
  h.eps_neg = 0.6;
  EXPECT_THROW(h.validate(), ConfigError);
  h = {};
  h.gamma = 1.0;
  EXPECT_THROW(h.validate(), ConfigError);
  h = {};
  EXPECT_NEAR(h.mask_out_prob(), 0.05, 1e-15);
  h.dropout_p0_is_keep = false;
  EXPECT_EQ(h.mask_out_prob(), 0.95);
}

TEST(Objective, ZeroAdvantageMovesOnlyCritic) {
  Toy toy(1);
  for (auto& x : toy.items) {
    x.advantage = 0.0;
    x.target = x.value + 0.3;
  }
  HyperParams hp;
  auto grads = toy.policy.params().zeros_like();
  const auto ptrs = toy.ptrs();
  ppo_objective(toy.policy, toy.policy.params(), ptrs, hp, &grads);
  for (std::size_t l = 0; l < grads.layer_count(); ++l) {
    if (grads.layer(l).name.rfind("actor", 0) != 0) continue;
    for (double v : grads.layer(l).weight.values()) EXPECT_EQ(v, 0.0);
  }
  hp.value_coef = 0.0;
  grads.set_zero();
  ppo_objective(toy.policy, toy.policy.params(), ptrs, hp, &grads);
  for (double v : grads.flatten()) EXPECT_EQ(v, 0.0);
}

TEST(Objective, UnclippedSingleSampleIsPolicyGradient) {
  // With zeta = 1 the actor term is -A * grad log pi(a); compare against
  // finite differences of that expression evaluated through the forward pass.
  Toy toy(2, 3, 1);
  Experience x = toy.items[1];
  x.advantage = 0.8;
  HyperParams hp;
  hp.value_coef = 0.0;
  const Experience* one[] = {&x};
  auto grads = toy.policy.params().zeros_like();
  ppo_objective(toy.policy, toy.policy.params(), one, hp, &grads);
  const nn::LossFn pg = [&](const nn::ParameterStore& p) {
    const Observation* o[] = {&x.obs};
    const auto out = toy.policy.forward(p, toy.policy.sample_batch(o), nullptr);
    return -x.advantage * std::log(out.probs(0, static_cast<std::size_t>(x.action)));
  };
  nn::GradCheckOptions opts;
  opts.coordinates = 400;
  const auto rep = nn::gradient_check(pg, toy.policy.params(), grads, opts);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error;
}

TEST(Objective, SkipsZeroBehaviorProbability) {
  Toy toy(3, 2, 1);
  toy.items[0].behavior_prob = 0.0;
  const auto ptrs = toy.ptrs();
  const auto t = ppo_objective(toy.policy, toy.policy.params(), ptrs, HyperParams{}, nullptr);
  EXPECT_EQ(t.used, 1u);
  EXPECT_TRUE(std::isfinite(t.total));
}

TEST(Update, LossDecreasesOnFrozenBuffer) {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Toy toy(seed, 5, 8);
    RolloutBuffer buf;
    for (auto& x : toy.items) buf.push(x);
    buf.finalize(0.6);
    HyperParams hp;
    hp.lr = 1e-3;
    hp.epochs = 8;
    hp.minibatch = 16;
    std::vector<const Experience*> all;
    for (const auto& x : buf.items()) all.push_back(&x);
    const double before = ppo_objective(toy.policy, toy.policy.params(), all, hp, nullptr).total;
    nn::Adam adam(toy.policy.params(), {hp.lr, 0.9, 0.999, 1e-8});
    Rng rng(seed);
    const auto v0 = toy.policy.params().version();
    const auto stats = update(buf, toy.policy, adam, hp, rng);
    const double after = ppo_objective(toy.policy, toy.policy.params(), all, hp, nullptr).total;
    EXPECT_LT(after, before) << "seed " << seed;
    EXPECT_EQ(toy.policy.params().version(), v0 + stats.optimizer_steps);
  }
}

TEST(Update, NonFiniteLossAborts) {
  Toy toy(4, 2, 1);
  RolloutBuffer buf;
  for (auto& x : toy.items) {
    x.advantage = std::numeric_limits<double>::quiet_NaN();
    buf.push(x);
  }
  HyperParams hp;
  nn::Adam adam(toy.policy.params(), {});
  Rng rng(1);
  EXPECT_THROW(update(buf, toy.policy, adam, hp, rng), Error);
}

TEST(Buffer, FinalizeUsesTd) {
  RolloutBuffer b;
  Experience x;
  x.reward = 1.0;
  x.value = 0.5;
  x.next_value = 2.0;
  b.push(x);
  x.done = true;
  b.push(x);
  b.finalize(0.6);
  EXPECT_NEAR(b.items()[0].advantage, 1.0 + 1.2 - 0.5, 1e-15);
  EXPECT_NEAR(b.items()[0].target, 2.2, 1e-15);
  EXPECT_NEAR(b.items()[1].advantage, 0.5, 1e-15);
}

namespace {

TrainSetup tiny_setup() {
  TrainSetup s;
  s.env.network = NetworkConfig::with_defaults(2, 50.0, 2);
  s.env.traffic.mode = TrafficMode::Infinite;
  s.policy.n_sbs = 2;
  s.policy.width = 8;
  s.policy.region = s.env.network.region;
  s.hyper.horizon = 5;
  s.n_ue = 4;
  return s;
}

}  // namespace

TEST(Train, ZeroEpisodesKeepsInitialParameters) {
  const auto s = tiny_setup();
  Trainer fresh(s, 5);
  const auto r = train(s, 0, 5);
  EXPECT_TRUE(r.metrics.empty());
  EXPECT_EQ(r.policy.params().flatten(), fresh.policy().params().flatten());
}

TEST(Train, DeterministicMetrics) {
  const auto s = tiny_setup();
  const auto a = train(s, 10, 9);
  const auto b = train(s, 10, 9);
  ASSERT_EQ(a.metrics.size(), 10u);
  for (std::size_t e = 0; e < 10; ++e) {
    EXPECT_EQ(a.metrics[e].mean_reward, b.metrics[e].mean_reward);
    EXPECT_EQ(a.metrics[e].heuristic_reward, b.metrics[e].heuristic_reward);
    EXPECT_EQ(a.metrics[e].actor_loss, b.metrics[e].actor_loss);
    EXPECT_EQ(a.metrics[e].collisions, b.metrics[e].collisions);
  }
  EXPECT_EQ(a.policy.params().flatten(), b.policy.params().flatten());
  EXPECT_GT(a.policy.params().version(), 0u);
}

TEST(Train, MetricsRelations) {
  const auto s = tiny_setup();
  const auto r = train(s, 3, 2);
  for (const auto& m : r.metrics) {
    EXPECT_DOUBLE_EQ(m.r_d, m.mean_reward - m.heuristic_reward);
    EXPECT_GE(m.k, 1u);
    EXPECT_LE(m.k, 4u);
    EXPECT_GE(m.policy_entropy, 0.0);
  }
}
