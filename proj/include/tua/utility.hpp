#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "tua/geometry.hpp"
#include "tua/matrix.hpp"

namespace tua {

// Demand sentinel for the no-traffic mode: the utility argument becomes the raw rate.
inline constexpr double kInfiniteDemand = std::numeric_limits<double>::infinity();

// Below this argument the alpha > 1 branch is evaluated at the floor instead
// of diverging to -inf.
inline constexpr double kAlphaFairFloor = 1e-9;

// (1-a)^-1 x^(1-a) for a != 1, ln(1 + x) for a == 1.
double alpha_fair(double x, double alpha);

// min(1, rate / demand); demand == 0 counts as fully satisfied.
double qos_satisfaction(double rate, double demand);

// kappa * D, or the raw rate when the demand is infinite.
double effective_rate(double rate, double demand);

// x(i, j) indicator, (n_bs x K).
class AssociationMatrix {
 public:
  AssociationMatrix() = default;
  AssociationMatrix(int n_bs, std::size_t n_ue) : x_(static_cast<std::size_t>(n_bs), n_ue) {}

  static AssociationMatrix from_assignment(std::span<const BsId> assignment, int n_bs);

  int n_bs() const { return static_cast<int>(x_.rows()); }
  std::size_t n_ue() const { return x_.cols(); }
  double& at(BsId bs, std::size_t ue) { return x_(static_cast<std::size_t>(bs), ue); }
  double at(BsId bs, std::size_t ue) const { return x_(static_cast<std::size_t>(bs), ue); }

  // Serving BS per UE; nullopt if any column is not a single 1.
  std::optional<std::vector<BsId>> to_assignment() const;

 private:
  Matrix x_;
};

struct UtilityReport {
  double total = 0.0;
  std::vector<double> per_ue_terms;
  std::vector<double> kappas;
  double alpha = 0.0;
};

struct Violation {
  enum class Kind { NonBinary, NotSingleAssociation, OutsideCandidates, OverCapacity };
  Kind kind;
  BsId bs = -1;
  std::size_t ue = 0;

  std::string describe() const;
};

std::optional<Violation> check_feasible(const AssociationMatrix& assoc, const CandidateSets& candidate_sets,
                                        std::span<const int> beam_budget);

std::optional<Violation> check_feasible(std::span<const BsId> assignment, const CandidateSets& candidate_sets,
                                        std::span<const int> beam_budget);

// Sum over associated pairs of U_alpha(kappa D). `rates` is (n_bs x K).
// Throws InfeasibleError when a column is not a single binary 1.
UtilityReport network_utility(const AssociationMatrix& assoc, const Matrix& rates, std::span<const double> demands,
                              double alpha);

// Same objective from served-link rates, one entry per UE.
UtilityReport assignment_utility(std::span<const double> served_rates, std::span<const double> demands, double alpha);

// Served-link rate per UE for a candidate association. Must be safe to call
// concurrently (the oracle enumerates in parallel).
using RateEvaluator = std::function<std::vector<double>(std::span<const BsId>)>;

struct AssociationProblem {
  int n_bs = 1;
  CandidateSets candidate_sets;
  std::vector<int> beam_budget;  // per SBS
  std::vector<double> demands;   // bps, or kInfiniteDemand
  double alpha = 0.0;
  RateEvaluator rates;

  std::size_t n_ue() const { return candidate_sets.size(); }
  double value(std::span<const BsId> assignment) const;
  UtilityReport report(std::span<const BsId> assignment) const;
};

// Rate evaluator backed by a fixed (n_bs x K) table, i.e. association-independent rates.
RateEvaluator table_rates(Matrix rates);

struct OracleLimits {
  std::size_t max_ue = 8;
  std::size_t max_candidates = 4;
};

class OracleRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleResult {
  std::vector<BsId> assignment;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t feasible_count = 0;
};

// Exhaustive maximizer; ties go to the lexicographically smallest assignment.
// Enumeration is split across OpenMP threads with an ordered reduction.
OracleResult exact_oracle(const AssociationProblem& problem, OracleLimits limits = {});

// Single-threaded enumeration kept as the reference for exact_oracle.
OracleResult exact_oracle_serial(const AssociationProblem& problem, OracleLimits limits = {});

}  // namespace tua
