#include "tua/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tua/error.hpp"

namespace tua {

std::vector<double> sample_traffic(const TrafficModel& traffic, Rng& rng) {
  std::vector<double> d(traffic.mean_demands_mbps.size(), kInfiniteDemand);
  if (traffic.mode == TrafficMode::Infinite) return d;
  for (std::size_t j = 0; j < d.size(); ++j) {
    std::poisson_distribution<long long> p(traffic.mean_demands_mbps[j]);
    d[j] = static_cast<double>(p(rng)) * 1e6;
  }
  return d;
}

std::vector<bool> apply_dropout(std::size_t n_ue, double mask_out_prob, Rng& rng) {
  std::bernoulli_distribution masked(std::clamp(mask_out_prob, 0.0, 1.0));
  std::vector<bool> active(n_ue, true);
  constexpr int kMaxDraws = 64;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    for (std::size_t j = 0; j < n_ue; ++j) active[j] = !masked(rng);
    if (std::find(active.begin(), active.end(), true) != active.end()) return active;
  }
  // Mask-out probability at or near one: keep a single uniformly chosen UE.
  std::uniform_int_distribution<std::size_t> pick(0, n_ue - 1);
  std::fill(active.begin(), active.end(), false);
  if (n_ue > 0) active[pick(rng)] = true;
  return active;
}

Resolution resolve_requests(std::span<const BsId> requests, const Matrix& priority,
                            const CandidateSets& candidate_sets, std::span<const int> beam_budget) {
  const std::size_t k = requests.size();
  if (candidate_sets.size() != k || priority.rows() != k)
    throw ShapeError("resolve_requests: " + std::to_string(k) + " requests, " +
                     std::to_string(candidate_sets.size()) + " candidate sets, " + std::to_string(priority.rows()) +
                     " priority rows");
  Resolution res;
  res.assignment.assign(requests.begin(), requests.end());
  res.ack.assign(k, 1);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& cand = candidate_sets[j];
    if (std::find(cand.begin(), cand.end(), res.assignment[j]) == cand.end()) {
      res.assignment[j] = kMacroBs;
      ++res.redirected;
    }
  }
  for (std::size_t s = 0; s < beam_budget.size(); ++s) {
    const auto bs = static_cast<BsId>(s + 1);
    std::vector<std::size_t> req;
    for (std::size_t j = 0; j < k; ++j)
      if (res.assignment[j] == bs) req.push_back(j);
    const auto cap = static_cast<std::size_t>(beam_budget[s]);
    if (req.size() <= cap) continue;
    std::stable_sort(req.begin(), req.end(), [&](std::size_t a, std::size_t b) {
      return priority(a, s + 1) > priority(b, s + 1);
    });
    for (std::size_t r = cap; r < req.size(); ++r) {
      res.assignment[req[r]] = kMacroBs;
      res.ack[req[r]] = 0;
      ++res.collisions;
    }
  }
  return res;
}

Environment::Environment(EnvConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
  config_.network.validate();
  config_.radio.mbs.validate();
  config_.radio.sbs.validate();
  if (config_.traffic.classes_mbps.empty()) throw ConfigError("traffic needs at least one service class");
}

std::vector<Observation> Environment::reset(const Deployment& deployment, const std::vector<bool>& active) {
  if (deployment.size() == 0) throw ConfigError("empty deployment");
  if (!active.empty() && active.size() != deployment.size()) throw ShapeError("active mask length mismatch");
  deployment_ = Deployment{};
  deployment_.timestamp = 0;
  active_ids_.clear();
  for (std::size_t j = 0; j < deployment.size(); ++j) {
    if (!active.empty() && !active[j]) continue;
    if (!config_.network.region.contains(deployment.positions[j]))
      throw ConfigError("UE " + std::to_string(j) + " lies outside the region");
    deployment_.positions.push_back(deployment.positions[j]);
    active_ids_.push_back(j);
  }
  if (deployment_.size() == 0) throw ConfigError("every UE is masked out");
  step_ = 0;
  topology_ = build_topology(config_.network, deployment_);
  const auto n_bs = static_cast<std::size_t>(config_.network.n_bs());
  const std::size_t k = deployment_.size();

  channel_.shadowing = sample_shadowing(config_.radio, n_bs, k, rng_);
  traffic_ = TrafficModel{};
  traffic_.mode = config_.traffic.mode;
  std::uniform_int_distribution<std::size_t> cls(0, config_.traffic.classes_mbps.size() - 1);
  for (std::size_t j = 0; j < k; ++j) traffic_.mean_demands_mbps.push_back(config_.traffic.classes_mbps[cls(rng_)]);
  draw_step();

  const std::vector<BsId> prev(k, kMacroBs);
  const std::vector<double> rates(k, 0.0);
  const std::vector<int> ack(k, 1);
  return observe(prev, rates, 0.0, ack);
}

void Environment::draw_step() {
  const auto n_bs = static_cast<std::size_t>(config_.network.n_bs());
  channel_.fading = sample_fading_grid(config_.radio, n_bs, deployment_.size(), rng_);
  traffic_.current_demands_bps = sample_traffic(traffic_, rng_);
}

std::vector<Observation> Environment::observe(std::span<const BsId> prev_action, std::span<const double> prev_rate,
                                              double prev_utility, std::span<const int> ack) {
  const std::size_t k = deployment_.size();
  std::vector<Observation> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    Observation& o = out[j];
    o.ue = j;
    auto m = measure(j, deployment_, topology_, config_.radio, channel_, rng_);
    o.local = LocalObservation{prev_action[j], prev_rate[j], prev_utility, ack[j], std::move(m.rss_w),
                               std::move(m.aoa_rad)};
    const Point p = deployment_.positions[j];
    o.self = {p.x, p.y, prev_rate[j]};
    o.global.neighbor_ids = topology_.neighbor_sets[j];
    for (std::size_t l : o.global.neighbor_ids) {
      const Point q = deployment_.positions[l];
      o.global.neighbors.push_back({q.x, q.y, prev_rate[l]});
    }
  }
  return out;
}

StepResult Environment::step(std::span<const BsId> requests, const Matrix& probs) {
  const std::size_t k = deployment_.size();
  if (requests.size() != k)
    throw ShapeError("step: " + std::to_string(requests.size()) + " requests for " + std::to_string(k) +
                     " active UEs");
  if (probs.rows() != k || probs.cols() != static_cast<std::size_t>(config_.network.n_bs()))
    throw ShapeError("step: probability matrix shape mismatch");

  StepResult r;
  r.resolution = resolve_requests(requests, probs, topology_.candidate_sets, config_.network.beam_budget);
  draw_step();
  r.links = compute_sinr_and_rates(r.resolution.assignment, deployment_, topology_, config_.radio, channel_);
  r.demands = traffic_.current_demands_bps;
  const auto rates = served_rates(r.links);
  r.utility = assignment_utility(rates, r.demands, config_.alpha);
  r.reward = r.utility.total;
  r.rewards.assign(k, r.reward);
  ++step_;
  deployment_.timestamp = step_;
  r.observations = observe(requests, rates, r.reward, r.resolution.ack);
  return r;
}

double Environment::score(std::span<const BsId> assignment) const {
  const auto links = compute_sinr_and_rates(assignment, deployment_, topology_, config_.radio, channel_);
  return assignment_utility(served_rates(links), traffic_.current_demands_bps, config_.alpha).total;
}

namespace {

AssociationProblem make_problem(const EnvConfig& cfg, const Deployment& dep, const Topology& topo,
                                ChannelRealization channel, std::vector<double> demands) {
  AssociationProblem p;
  p.n_bs = cfg.network.n_bs();
  p.candidate_sets = topo.candidate_sets;
  p.beam_budget = cfg.network.beam_budget;
  p.demands = std::move(demands);
  p.alpha = cfg.alpha;
  p.rates = [dep, topo, radio = cfg.radio, channel = std::move(channel)](std::span<const BsId> a) {
    return served_rates(compute_sinr_and_rates(a, dep, topo, radio, channel));
  };
  return p;
}

}  // namespace

AssociationProblem Environment::planning_problem() const {
  std::vector<double> demands(deployment_.size(), kInfiniteDemand);
  if (traffic_.mode == TrafficMode::Poisson)
    for (std::size_t j = 0; j < demands.size(); ++j) demands[j] = traffic_.mean_demands_mbps[j] * 1e6;
  return make_problem(config_, deployment_, topology_, expected_channel(channel_.shadowing), std::move(demands));
}

AssociationProblem Environment::realized_problem() const {
  return make_problem(config_, deployment_, topology_, channel_, traffic_.current_demands_bps);
}

}  // namespace tua
