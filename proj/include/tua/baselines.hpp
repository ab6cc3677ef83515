#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tua/matrix.hpp"
#include "tua/utility.hpp"

namespace tua {

struct BaselineResult {
  std::vector<BsId> assignment;
  UtilityReport utility;
  std::size_t iterations = 0;
  std::vector<double> trajectory;  // utility after each accepted move (heuristic only)
};

// Every UE requests its highest-SNR candidate BS; over-subscribed SBSs keep
// their highest-SNR requesters and the rest fall back to the MBS.
// snr is (n_bs x K).
BaselineResult max_snr(const AssociationProblem& problem, const Matrix& snr);

// Greedy local search seeded by max_snr: apply the single-UE reassignment with
// the largest utility gain until none improves.
BaselineResult centralized_heuristic(const AssociationProblem& problem, const Matrix& snr);

struct RewardGap {
  double absolute = 0.0;
  std::optional<double> relative;  // absolute / heuristic_mean
};

RewardGap reward_gap(double rl_mean, double heuristic_mean);

}  // namespace tua
