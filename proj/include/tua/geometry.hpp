#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tua/rng.hpp"

namespace tua {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

// Direction of `to` as seen from `from`, radians in (-pi, pi]; 0 = due east.
double bearing(Point from, Point to);

// |a - b| wrapped into [0, pi].
double angle_offset(double a, double b);

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  Point center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool contains(Point p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

// BS id 0 is the macro BS; SBS ids are 1..n_sbs.
using BsId = int;
inline constexpr BsId kMacroBs = 0;

struct NetworkConfig {
  int n_sbs = 3;
  double coverage_radius_m = 50.0;
  double inter_cell_distance_m = 60.0;
  Rect region{0.0, 0.0, 200.0, 200.0};
  // beam_budget[i - 1] is the number of simultaneous UEs SBS i can serve.
  std::vector<int> beam_budget{3, 3, 3};
  int neighbor_k = 15;

  int n_bs() const { return n_sbs + 1; }
  int capacity(BsId bs) const { return beam_budget.at(static_cast<std::size_t>(bs - 1)); }
  void set_uniform_beams(int beams) { beam_budget.assign(static_cast<std::size_t>(n_sbs), beams); }

  // Throws ConfigError.
  void validate() const;

  // Square region of side 4 R0, lattice pitch 1.2 R0.
  static NetworkConfig with_defaults(int n_sbs, double coverage_radius_m, int beams);
};

// UE positions for one episode. UE j is positions[j] (0-based internally).
struct Deployment {
  std::vector<Point> positions;
  int timestamp = 0;

  std::size_t size() const { return positions.size(); }
};

using CandidateSets = std::vector<std::vector<BsId>>;
using NeighborSets = std::vector<std::vector<std::size_t>>;

struct Topology {
  std::vector<Point> bs_positions;  // index = BsId
  CandidateSets candidate_sets;     // sorted BS ids, always contains 0
  NeighborSets neighbor_sets;       // ordered by UE id
};

// MBS at the region center, SBSs on a centered row-major lattice.
std::vector<Point> place_base_stations(const NetworkConfig& config);

Deployment generate_deployment(const NetworkConfig& config, std::size_t n_ue, Rng& rng);

CandidateSets candidate_bs(const Deployment& deployment, std::span<const Point> bs_positions,
                           const NetworkConfig& config);

// The min(k, K-1) nearest UEs to `ue`, ties broken by lower id, returned sorted by id.
std::vector<std::size_t> k_nearest_neighbors(const Deployment& deployment, std::size_t ue, std::size_t k);

Topology build_topology(const NetworkConfig& config, const Deployment& deployment);

}  // namespace tua
