#include "tua/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "tua/error.hpp"

namespace tua {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double bearing(Point from, Point to) { return std::atan2(to.y - from.y, to.x - from.x); }

double angle_offset(double a, double b) {
  double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::abs(d);
}

void NetworkConfig::validate() const {
  if (n_sbs < 1) throw ConfigError("n_sbs must be >= 1");
  if (!(coverage_radius_m > 0.0)) throw ConfigError("coverage_radius_m must be > 0");
  if (!(inter_cell_distance_m > 0.0)) throw ConfigError("inter_cell_distance_m must be > 0");
  if (neighbor_k < 0) throw ConfigError("neighbor_k must be >= 0");
  if (!(region.width() > 0.0) || !(region.height() > 0.0)) throw ConfigError("region must have positive area");
  if (beam_budget.size() != static_cast<std::size_t>(n_sbs))
    throw ConfigError("beam_budget has " + std::to_string(beam_budget.size()) + " entries, expected " +
                      std::to_string(n_sbs));
  for (int b : beam_budget)
    if (b < 1) throw ConfigError("beam_budget entries must be >= 1");
}

NetworkConfig NetworkConfig::with_defaults(int n_sbs, double coverage_radius_m, int beams) {
  NetworkConfig c;
  c.n_sbs = n_sbs;
  c.coverage_radius_m = coverage_radius_m;
  c.inter_cell_distance_m = 1.2 * coverage_radius_m;
  const double side = 4.0 * coverage_radius_m;
  c.region = {0.0, 0.0, side, side};
  c.set_uniform_beams(beams);
  return c;
}

std::vector<Point> place_base_stations(const NetworkConfig& config) {
  config.validate();
  const int n = config.n_sbs;
  const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
  const int cols = (n + rows - 1) / rows;
  const double pitch = config.inter_cell_distance_m;
  const Point c = config.region.center();

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back(c);

  const double y0 = c.y - 0.5 * pitch * (rows - 1);
  for (int r = 0; r < rows; ++r) {
    const int in_row = std::min(cols, n - r * cols);
    if (in_row <= 0) break;
    const double x0 = c.x - 0.5 * pitch * (in_row - 1);
    for (int k = 0; k < in_row; ++k) {
      Point p{x0 + pitch * k, y0 + pitch * r};
      if (!config.region.contains(p))
        throw ConfigError("region too small for a " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " SBS lattice with pitch " + std::to_string(pitch) + " m");
      out.push_back(p);
    }
  }
  return out;
}

Deployment generate_deployment(const NetworkConfig& config, std::size_t n_ue, Rng& rng) {
  if (n_ue == 0) throw ConfigError("a deployment needs at least one UE");
  std::uniform_real_distribution<double> ux(config.region.x_min, config.region.x_max);
  std::uniform_real_distribution<double> uy(config.region.y_min, config.region.y_max);
  Deployment d;
  d.positions.reserve(n_ue);
  for (std::size_t j = 0; j < n_ue; ++j) {
    const double x = ux(rng);
    const double y = uy(rng);
    d.positions.push_back({x, y});
  }
  return d;
}

CandidateSets candidate_bs(const Deployment& deployment, std::span<const Point> bs_positions,
                           const NetworkConfig& config) {
  CandidateSets sets(deployment.size());
  for (std::size_t j = 0; j < deployment.size(); ++j) {
    sets[j].push_back(kMacroBs);
    for (std::size_t i = 1; i < bs_positions.size(); ++i)
      if (distance(deployment.positions[j], bs_positions[i]) <= config.coverage_radius_m)
        sets[j].push_back(static_cast<BsId>(i));
  }
  return sets;
}

std::vector<std::size_t> k_nearest_neighbors(const Deployment& deployment, std::size_t ue, std::size_t k) {
  const std::size_t n = deployment.size();
  std::vector<std::size_t> others;
  others.reserve(n);
  for (std::size_t l = 0; l < n; ++l)
    if (l != ue) others.push_back(l);
  const std::size_t take = std::min(k, others.size());
  const Point p = deployment.positions.at(ue);
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = distance(p, deployment.positions[a]);
    const double db = distance(p, deployment.positions[b]);
    return da < db || (da == db && a < b);
  };
  std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(take), others.end(), closer);
  others.resize(take);
  std::sort(others.begin(), others.end());
  return others;
}

Topology build_topology(const NetworkConfig& config, const Deployment& deployment) {
  Topology t;
  t.bs_positions = place_base_stations(config);
  t.candidate_sets = candidate_bs(deployment, t.bs_positions, config);
  t.neighbor_sets.resize(deployment.size());
  for (std::size_t j = 0; j < deployment.size(); ++j)
    t.neighbor_sets[j] = k_nearest_neighbors(deployment, j, static_cast<std::size_t>(config.neighbor_k));
  return t;
}

}  // namespace tua
