#include <gtest/gtest.h>

#include <cmath>

#include "tua/env.hpp"
#include "tua/error.hpp"

using namespace tua;

namespace {

EnvConfig small_env(TrafficMode mode = TrafficMode::Poisson) {
  EnvConfig c;
  c.network = NetworkConfig::with_defaults(3, 50.0, 3);
  c.traffic.mode = mode;
  return c;
}

Matrix uniform_probs(std::size_t k, std::size_t n_bs) { return Matrix(k, n_bs, 1.0 / static_cast<double>(n_bs)); }

std::vector<BsId> random_requests(std::size_t k, int n_bs, Rng& rng) {
  std::uniform_int_distribution<int> u(0, n_bs - 1);
  std::vector<BsId> r(k);
  for (auto& a : r) a = u(rng);
  return r;
}

}  // namespace

TEST(Traffic, PoissonMeanAndSupport) {
  TrafficModel t;
  t.mode = TrafficMode::Poisson;
  t.mean_demands_mbps.assign(1, 200.0);
  Rng rng(1);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) s += sample_traffic(t, rng)[0];
  const double mean_mbps = s / 100000 / 1e6;
  EXPECT_GE(mean_mbps, 198.0);
  EXPECT_LE(mean_mbps, 202.0);

  t.mean_demands_mbps.assign(1, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double d = sample_traffic(t, rng)[0] / 1e6;
    EXPECT_GE(d, 0.0);
    EXPECT_EQ(d, std::round(d));
  }
}

TEST(Traffic, InfiniteModeSentinel) {
  TrafficModel t;
  t.mode = TrafficMode::Infinite;
  t.mean_demands_mbps.assign(4, 200.0);
  Rng rng(1);
  for (double d : sample_traffic(t, rng)) EXPECT_EQ(d, kInfiniteDemand);
}

TEST(Dropout, Extremes) {
  Rng rng(1);
  const auto none = apply_dropout(10, 0.0, rng);
  EXPECT_EQ(std::count(none.begin(), none.end(), true), 10);
  const auto all = apply_dropout(10, 1.0, rng);
  EXPECT_GE(std::count(all.begin(), all.end(), true), 1);
}

TEST(Dropout, HalfMaskMean) {
  Rng rng(2);
  double s = 0.0;
  for (int e = 0; e < 10000; ++e) {
    const auto a = apply_dropout(10, 0.5, rng);
    s += static_cast<double>(std::count(a.begin(), a.end(), true));
  }
  // Resampling the all-masked draw (probability 2^-10) shifts the mean by ~0.005.
  EXPECT_NEAR(s / 10000, 5.0, 0.2);
}

TEST(Resolve, LowestProbabilityLoses) {
  const std::vector<BsId> req{1, 1, 1, 1};
  Matrix p(4, 2, 0.0);
  const double pr[] = {0.9, 0.8, 0.7, 0.6};
  for (int j = 0; j < 4; ++j) p(j, 1) = pr[j];
  const CandidateSets c(4, {0, 1});
  const int budget[] = {3};
  const auto r = resolve_requests(req, p, c, budget);
  EXPECT_EQ(r.assignment, (std::vector<BsId>{1, 1, 1, 0}));
  EXPECT_EQ(r.ack, (std::vector<int>{1, 1, 1, 0}));
  EXPECT_EQ(r.collisions, 1u);
}

TEST(Resolve, TiesByLowerIdAndRedirects) {
  const std::vector<BsId> req{1, 1, 2};
  Matrix p(3, 3, 0.5);
  const CandidateSets c{{0, 1}, {0, 1}, {0, 1}};
  const int budget[] = {1, 1};
  const auto r = resolve_requests(req, p, c, budget);
  EXPECT_EQ(r.assignment, (std::vector<BsId>{1, 0, 0}));
  EXPECT_EQ(r.ack, (std::vector<int>{1, 0, 1}));  // redirect is not a collision
  EXPECT_EQ(r.redirected, 1u);
}

TEST(Resolve, AllMacroAcked) {
  const std::vector<BsId> req(6, 0);
  const CandidateSets c(6, {0, 1});
  const int budget[] = {1};
  const auto r = resolve_requests(req, Matrix(6, 2, 0.5), c, budget);
  for (int a : r.ack) EXPECT_EQ(a, 1);
}

TEST(Environment, ResetState) {
  Environment env(small_env(), 3);
  Rng rng(1);
  const auto dep = generate_deployment(env.config().network, 20, rng);
  const auto obs = env.reset(dep);
  ASSERT_EQ(obs.size(), 20u);
  for (const auto& o : obs) {
    EXPECT_EQ(o.local.prev_action, 0);
    EXPECT_EQ(o.local.prev_rate, 0.0);
    EXPECT_EQ(o.local.prev_network_utility, 0.0);
    EXPECT_EQ(o.local.ack, 1);
    EXPECT_EQ(o.local.rss.size(), 4u);
    EXPECT_LE(o.global.neighbors.size(), 15u);
  }
  Environment env2(small_env(), 3);
  const auto obs2 = env2.reset(dep);
  for (std::size_t j = 0; j < obs.size(); ++j) {
    EXPECT_EQ(obs[j].local.rss, obs2[j].local.rss);
    EXPECT_EQ(obs[j].local.aoa, obs2[j].local.aoa);
  }
}

TEST(Environment, StepRejectsWrongLength) {
  Environment env(small_env(), 3);
  Rng rng(1);
  env.reset(generate_deployment(env.config().network, 5, rng));
  const std::vector<BsId> req(4, 0);
  EXPECT_THROW(env.step(req, uniform_probs(4, 4)), ShapeError);
}

TEST(Environment, RewardMatchesIndependentRecomputation) {
  for (double alpha : {0.0, 1.0}) {
    auto cfg = small_env();
    cfg.alpha = alpha;
    Environment env(cfg, 5);
    Rng rng(2);
    env.reset(generate_deployment(cfg.network, 12, rng));
    for (int t = 0; t < 50; ++t) {
      const auto req = random_requests(12, 4, rng);
      const auto r = env.step(req, uniform_probs(12, 4));
      double expected = 0.0;
      for (std::size_t j = 0; j < r.links.size(); ++j) {
        const double rate = r.links[j].rate_bps;
        const double d = r.demands[j];
        const double x = std::isinf(d) ? rate : (d <= 0.0 ? d : std::min(rate, d));
        expected += alpha == 1.0 ? std::log(1.0 + x) : x;
      }
      EXPECT_NEAR(r.reward, expected, 1e-9 * std::max(1.0, std::abs(expected)));
      for (double v : r.rewards) EXPECT_EQ(v, r.reward);
    }
  }
}

TEST(Environment, FeasibleAndAckSound) {
  auto cfg = small_env();
  cfg.network.set_uniform_beams(2);
  Environment env(cfg, 7);
  Rng rng(3);
  env.reset(generate_deployment(cfg.network, 15, rng));
  for (int t = 0; t < 300; ++t) {
    const auto req = random_requests(15, 4, rng);
    Matrix probs(15, 4);
    std::uniform_real_distribution<double> u;
    for (double& v : probs.values()) v = u(rng);
    const auto r = env.step(req, probs);
    EXPECT_FALSE(check_feasible(r.resolution.assignment, env.topology().candidate_sets, cfg.network.beam_budget));
    for (std::size_t j = 0; j < 15; ++j) {
      const bool displaced = req[j] != 0 && r.resolution.assignment[j] == 0 &&
                             std::find(env.topology().candidate_sets[j].begin(),
                                       env.topology().candidate_sets[j].end(),
                                       req[j]) != env.topology().candidate_sets[j].end();
      EXPECT_EQ(r.resolution.ack[j] == 0, displaced);
    }
  }
}

TEST(Environment, DrawsIndependentOfActions) {
  auto cfg = small_env();
  Environment a(cfg, 9), b(cfg, 9);
  Rng rng(4);
  const auto dep = generate_deployment(cfg.network, 8, rng);
  a.reset(dep);
  b.reset(dep);
  for (int t = 0; t < 20; ++t) {
    a.step(random_requests(8, 4, rng), uniform_probs(8, 4));
    b.step(std::vector<BsId>(8, 0), uniform_probs(8, 4));
    EXPECT_EQ(a.channel().fading, b.channel().fading);
    EXPECT_EQ(a.traffic().current_demands_bps, b.traffic().current_demands_bps);
  }
}

TEST(Environment, MaskedUeIsInvisible) {
  auto cfg = small_env();
  Rng rng(5);
  const auto full = generate_deployment(cfg.network, 10, rng);
  std::vector<bool> mask(10, true);
  mask[4] = false;
  Deployment removed = full;
  removed.positions.erase(removed.positions.begin() + 4);

  Environment masked(cfg, 11), deleted(cfg, 11);
  auto o1 = masked.reset(full, mask);
  auto o2 = deleted.reset(removed);
  EXPECT_EQ(masked.active_ids().size(), 9u);
  for (int t = 0; t < 10; ++t) {
    ASSERT_EQ(o1.size(), o2.size());
    for (std::size_t j = 0; j < o1.size(); ++j) {
      EXPECT_EQ(o1[j].local.rss, o2[j].local.rss);
      EXPECT_EQ(o1[j].local.aoa, o2[j].local.aoa);
      EXPECT_EQ(o1[j].global.neighbors, o2[j].global.neighbors);
      EXPECT_EQ(o1[j].self, o2[j].self);
    }
    const auto req = random_requests(9, 4, rng);
    const auto r1 = masked.step(req, uniform_probs(9, 4));
    const auto r2 = deleted.step(req, uniform_probs(9, 4));
    for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(r1.links[j].sinr, r2.links[j].sinr);
    EXPECT_EQ(r1.reward, r2.reward);
    o1 = r1.observations;
    o2 = r2.observations;
  }
}

TEST(Environment, ScoreMatchesStepReward) {
  Environment env(small_env(), 13);
  Rng rng(6);
  env.reset(generate_deployment(env.config().network, 9, rng));
  const auto req = random_requests(9, 4, rng);
  const auto r = env.step(req, uniform_probs(9, 4));
  EXPECT_EQ(env.score(r.resolution.assignment), r.reward);
}
