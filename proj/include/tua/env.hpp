#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tua/channel.hpp"
#include "tua/geometry.hpp"
#include "tua/matrix.hpp"
#include "tua/rng.hpp"
#include "tua/utility.hpp"

namespace tua {

enum class TrafficMode { Poisson, Infinite };

struct TrafficConfig {
  TrafficMode mode = TrafficMode::Poisson;
  std::vector<double> classes_mbps{5.0, 200.0, 1500.0};
};

struct TrafficModel {
  TrafficMode mode = TrafficMode::Poisson;
  std::vector<double> mean_demands_mbps;
  std::vector<double> current_demands_bps;
};

// D_j ~ Poisson(mean in Mbps) * 1e6, or kInfiniteDemand for every UE.
std::vector<double> sample_traffic(const TrafficModel& traffic, Rng& rng);

// Each UE is masked out independently with probability `mask_out_prob`;
// resampled until at least one UE stays active.
std::vector<bool> apply_dropout(std::size_t n_ue, double mask_out_prob, Rng& rng);

struct LocalObservation {
  BsId prev_action = kMacroBs;
  double prev_rate = 0.0;              // bps
  double prev_network_utility = 0.0;   // R(t-1)
  int ack = 1;
  std::vector<double> rss;             // W, length n_bs, 0 outside the candidate set
  std::vector<double> aoa;             // rad, same layout
};

// (x, y, previous rate) of one UE.
struct Descriptor {
  double x = 0.0;
  double y = 0.0;
  double rate = 0.0;
  bool operator==(const Descriptor&) const = default;
};

struct GlobalObservation {
  std::vector<std::size_t> neighbor_ids;  // sorted
  std::vector<Descriptor> neighbors;      // aligned with neighbor_ids
};

struct Observation {
  std::size_t ue = 0;
  LocalObservation local;
  Descriptor self;
  GlobalObservation global;
};

struct EnvConfig {
  NetworkConfig network;
  RadioConfig radio;
  TrafficConfig traffic;
  double alpha = 0.0;
};

struct Resolution {
  std::vector<BsId> assignment;
  std::vector<int> ack;
  std::size_t collisions = 0;  // requests displaced to the MBS by capacity
  std::size_t redirected = 0;  // requests outside the candidate set
};

// Redirects requests outside A_j to the MBS, then lets every over-subscribed
// SBS keep its N_i requesters with the highest priority (ties: lower UE id).
// priority is (K x n_bs).
Resolution resolve_requests(std::span<const BsId> requests, const Matrix& priority,
                            const CandidateSets& candidate_sets, std::span<const int> beam_budget);

struct StepResult {
  std::vector<Observation> observations;
  double reward = 0.0;               // shared R(t)
  std::vector<double> rewards;       // one entry per active UE, all equal
  Resolution resolution;
  std::vector<LinkState> links;
  UtilityReport utility;
  std::vector<double> demands;
};

// One deployment at a time. UEs excluded by the active mask are removed
// before anything else happens, so they never reach neighbor sets,
// interference or BS contention. All per-step randomness is drawn
// independently of the requested association.
class Environment {
 public:
  Environment(EnvConfig config, std::uint64_t seed);

  std::vector<Observation> reset(const Deployment& deployment, const std::vector<bool>& active = {});

  // requests and probs are indexed by active UE (probs: K_active x n_bs).
  StepResult step(std::span<const BsId> requests, const Matrix& probs);

  // Utility of an arbitrary association under the current step's channel and demands.
  double score(std::span<const BsId> assignment) const;

  // Association problem under the expected channel (h = 1) and mean demands.
  AssociationProblem planning_problem() const;

  // Problem under the current step's realized channel and demands.
  AssociationProblem realized_problem() const;

  const EnvConfig& config() const { return config_; }
  const Deployment& deployment() const { return deployment_; }
  const Topology& topology() const { return topology_; }
  const TrafficModel& traffic() const { return traffic_; }
  const ChannelRealization& channel() const { return channel_; }
  std::span<const std::size_t> active_ids() const { return active_ids_; }
  std::size_t n_active() const { return deployment_.size(); }
  int step_index() const { return step_; }

 private:
  std::vector<Observation> observe(std::span<const BsId> prev_action, std::span<const double> prev_rate,
                                   double prev_utility, std::span<const int> ack);
  void draw_step();

  EnvConfig config_;
  Rng rng_;
  Deployment deployment_;  // active UEs only
  std::vector<std::size_t> active_ids_;
  Topology topology_;
  TrafficModel traffic_;
  ChannelRealization channel_;
  int step_ = 0;
};

}  // namespace tua
