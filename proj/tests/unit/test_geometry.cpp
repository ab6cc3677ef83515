#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tua/error.hpp"
#include "tua/geometry.hpp"

using namespace tua;

namespace {

NetworkConfig three_cells() { return NetworkConfig::with_defaults(3, 50.0, 3); }

}  // namespace

TEST(PlaceBaseStations, ThreeSbsInOneRowSixtyMetresApart) {
  const auto bs = place_base_stations(three_cells());
  ASSERT_EQ(bs.size(), 4u);
  EXPECT_EQ(bs[0], (Point{100.0, 100.0}));
  for (int i = 1; i <= 3; ++i) EXPECT_DOUBLE_EQ(bs[i].y, bs[1].y);
  EXPECT_DOUBLE_EQ(bs[2].x - bs[1].x, 60.0);
  EXPECT_DOUBLE_EQ(bs[3].x - bs[2].x, 60.0);
}

TEST(PlaceBaseStations, AllInsideRegionByHand) {
  // Row of three centered on x = 100: 40, 100, 160; all within [0, 200].
  const auto cfg = three_cells();
  const auto bs = place_base_stations(cfg);
  const double expected_x[] = {40.0, 100.0, 160.0};
  for (int i = 1; i <= 3; ++i) {
    EXPECT_NEAR(bs[i].x, expected_x[i - 1], 1e-12);
    EXPECT_TRUE(cfg.region.contains(bs[i]));
  }
}

TEST(PlaceBaseStations, SingleSbsAtCenter) {
  const auto bs = place_base_stations(NetworkConfig::with_defaults(1, 50.0, 3));
  EXPECT_EQ(bs[1], (Point{100.0, 100.0}));
}

TEST(PlaceBaseStations, PureFunction) {
  EXPECT_EQ(place_base_stations(three_cells()), place_base_stations(three_cells()));
}

TEST(PlaceBaseStations, RegionTooSmallIsConfigError) {
  auto cfg = three_cells();
  cfg.region = {0.0, 0.0, 90.0, 90.0};
  EXPECT_THROW(place_base_stations(cfg), ConfigError);
}

TEST(NetworkConfig, ValidateRejectsBadFields) {
  auto cfg = three_cells();
  cfg.beam_budget[1] = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = three_cells();
  cfg.coverage_radius_m = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = three_cells();
  cfg.n_sbs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GenerateDeployment, DeterministicPerSeed) {
  Rng a(7), b(7);
  const auto d1 = generate_deployment(three_cells(), 15, a);
  const auto d2 = generate_deployment(three_cells(), 15, b);
  EXPECT_EQ(d1.positions, d2.positions);
}

TEST(GenerateDeployment, SingleUe) {
  Rng rng(1);
  const auto d = generate_deployment(three_cells(), 1, rng);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_TRUE(three_cells().region.contains(d.positions[0]));
}

TEST(GenerateDeployment, MeanNearCenter) {
  Rng rng(3);
  const auto d = generate_deployment(three_cells(), 10000, rng);
  double sx = 0.0, sy = 0.0;
  for (const auto& p : d.positions) {
    sx += p.x;
    sy += p.y;
  }
  EXPECT_LT(std::hypot(sx / 1e4 - 100.0, sy / 1e4 - 100.0), 5.0);
}

TEST(CandidateBs, ThresholdsAndBoundary) {
  auto cfg = three_cells();
  cfg.region = {0.0, 0.0, 600.0, 600.0};
  const std::vector<Point> bs{{500.0, 500.0}, {100.0, 100.0}, {349.0, 100.0}, {149.0, 300.0}};
  Deployment d;
  d.positions = {{149.0, 100.0},   // 49 m from SBS 1, 200 m from SBS 2 and 3
                 {580.0, 20.0},    // out of every SBS range
                 {349.0, 150.0}};  // exactly R0 from SBS 2
  const auto c = candidate_bs(d, bs, cfg);
  EXPECT_EQ(c[0], (std::vector<BsId>{0, 1}));
  EXPECT_EQ(c[1], (std::vector<BsId>{0}));
  EXPECT_EQ(c[2], (std::vector<BsId>{0, 2}));
}

TEST(CandidateBs, ExhaustiveDefinition) {
  const auto cfg = three_cells();
  const auto bs = place_base_stations(cfg);
  Rng rng(11);
  const auto d = generate_deployment(cfg, 500, rng);
  const auto c = candidate_bs(d, bs, cfg);
  for (std::size_t j = 0; j < d.size(); ++j) {
    EXPECT_EQ(c[j].front(), 0);
    for (BsId i = 1; i <= cfg.n_sbs; ++i) {
      const bool in = std::find(c[j].begin(), c[j].end(), i) != c[j].end();
      EXPECT_EQ(in, distance(d.positions[j], bs[static_cast<std::size_t>(i)]) <= cfg.coverage_radius_m);
    }
  }
}

TEST(KNearest, CollinearExample) {
  Deployment d;
  d.positions = {{0.0, 0.0}, {10.0, 0.0}, {100.0, 0.0}};
  EXPECT_EQ(k_nearest_neighbors(d, 0, 1), (std::vector<std::size_t>{1}));
}

TEST(KNearest, CapsAtKMinusOne) {
  Rng rng(5);
  const auto d = generate_deployment(three_cells(), 10, rng);
  const auto n = k_nearest_neighbors(d, 3, 15);
  EXPECT_EQ(n.size(), 9u);
  EXPECT_TRUE(std::find(n.begin(), n.end(), 3u) == n.end());
}

TEST(KNearest, TieGoesToLowerId) {
  Deployment d;
  d.positions = {{50.0, 50.0}, {60.0, 50.0}, {40.0, 50.0}};
  EXPECT_EQ(k_nearest_neighbors(d, 0, 1), (std::vector<std::size_t>{1}));
}

TEST(KNearest, RelabelingPermutesSets) {
  Rng rng(9);
  const auto d = generate_deployment(three_cells(), 12, rng);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  Deployment p;  // p.positions[perm[j]] = d.positions[j]
  p.positions.resize(12);
  for (std::size_t j = 0; j < 12; ++j) p.positions[perm[j]] = d.positions[j];
  for (std::size_t j = 0; j < 12; ++j) {
    auto expected = k_nearest_neighbors(d, j, 4);
    for (auto& e : expected) e = perm[e];
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(k_nearest_neighbors(p, perm[j], 4), expected);
  }
}

TEST(Topology, Invariants) {
  const auto cfg = three_cells();
  Rng rng(13);
  const auto d = generate_deployment(cfg, 30, rng);
  const auto t = build_topology(cfg, d);
  for (std::size_t j = 0; j < d.size(); ++j) {
    EXPECT_LE(t.neighbor_sets[j].size(), static_cast<std::size_t>(cfg.neighbor_k));
    EXPECT_TRUE(std::find(t.neighbor_sets[j].begin(), t.neighbor_sets[j].end(), j) == t.neighbor_sets[j].end());
  }
}

TEST(Angles, BearingAndOffset) {
  EXPECT_DOUBLE_EQ(bearing({0, 0}, {5, 0}), 0.0);
  EXPECT_NEAR(bearing({0, 0}, {0, 5}), std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(angle_offset(0.1, 2 * std::numbers::pi - 0.1), 0.2, 1e-12);
  EXPECT_NEAR(angle_offset(-3.0, 3.0), 2 * std::numbers::pi - 6.0, 1e-12);
}
