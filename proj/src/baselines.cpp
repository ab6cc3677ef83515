#include "tua/baselines.hpp"

#include <cmath>

#include "tua/env.hpp"
#include "tua/error.hpp"

namespace tua {

BaselineResult max_snr(const AssociationProblem& problem, const Matrix& snr) {
  const std::size_t k = problem.n_ue();
  if (snr.cols() != k || snr.rows() != static_cast<std::size_t>(problem.n_bs))
    throw ShapeError("max_snr: SNR grid does not match the problem");
  std::vector<BsId> requests(k, kMacroBs);
  Matrix priority(k, snr.rows());
  for (std::size_t j = 0; j < k; ++j) {
    double best = -1.0;
    for (BsId i : problem.candidate_sets[j]) {
      const double s = snr(static_cast<std::size_t>(i), j);
      if (s > best) {
        best = s;
        requests[j] = i;
      }
    }
    for (std::size_t i = 0; i < snr.rows(); ++i) priority(j, i) = snr(i, j);
  }
  const auto res = resolve_requests(requests, priority, problem.candidate_sets, problem.beam_budget);
  BaselineResult out;
  out.assignment = res.assignment;
  out.utility = problem.report(out.assignment);
  return out;
}

BaselineResult centralized_heuristic(const AssociationProblem& problem, const Matrix& snr) {
  BaselineResult out = max_snr(problem, snr);
  std::vector<BsId> current = out.assignment;
  double value = out.utility.total;
  std::vector<int> load(problem.beam_budget.size(), 0);
  for (BsId a : current)
    if (a != kMacroBs) ++load[static_cast<std::size_t>(a - 1)];

  std::vector<BsId> trial;
  for (;;) {
    double best_gain = 0.0;
    std::size_t best_ue = 0;
    BsId best_bs = -1;
    for (std::size_t j = 0; j < current.size(); ++j) {
      for (BsId i : problem.candidate_sets[j]) {
        if (i == current[j]) continue;
        if (i != kMacroBs && load[static_cast<std::size_t>(i - 1)] >= problem.beam_budget[static_cast<std::size_t>(i - 1)])
          continue;
        trial = current;
        trial[j] = i;
        const double gain = problem.value(trial) - value;
        if (gain > best_gain) {
          best_gain = gain;
          best_ue = j;
          best_bs = i;
        }
      }
    }
    if (best_bs < 0) break;
    if (current[best_ue] != kMacroBs) --load[static_cast<std::size_t>(current[best_ue] - 1)];
    if (best_bs != kMacroBs) ++load[static_cast<std::size_t>(best_bs - 1)];
    current[best_ue] = best_bs;
    value += best_gain;
    ++out.iterations;
    out.trajectory.push_back(problem.value(current));
    value = out.trajectory.back();
  }
  out.assignment = current;
  out.utility = problem.report(current);
  return out;
}

RewardGap reward_gap(double rl_mean, double heuristic_mean) {
  RewardGap g;
  g.absolute = rl_mean - heuristic_mean;
  if (heuristic_mean != 0.0) g.relative = g.absolute / std::abs(heuristic_mean);
  return g;
}

}  // namespace tua
