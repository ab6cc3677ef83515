#include "tua/utility.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>

#include "tua/error.hpp"

namespace tua {

double alpha_fair(double x, double alpha) {
  if (alpha == 1.0) return std::log1p(x);
  if (alpha > 1.0 && x < kAlphaFairFloor) x = kAlphaFairFloor;
  if (alpha == 0.0) return x;
  return std::pow(x, 1.0 - alpha) / (1.0 - alpha);
}

double qos_satisfaction(double rate, double demand) {
  if (demand <= 0.0) return 1.0;
  if (std::isinf(demand)) return 0.0;
  return std::min(1.0, rate / demand);
}

double effective_rate(double rate, double demand) {
  if (std::isinf(demand)) return rate;
  return qos_satisfaction(rate, demand) * demand;
}

AssociationMatrix AssociationMatrix::from_assignment(std::span<const BsId> assignment, int n_bs) {
  AssociationMatrix m(n_bs, assignment.size());
  for (std::size_t j = 0; j < assignment.size(); ++j) m.at(assignment[j], j) = 1.0;
  return m;
}

std::optional<std::vector<BsId>> AssociationMatrix::to_assignment() const {
  std::vector<BsId> out(n_ue(), -1);
  for (std::size_t j = 0; j < n_ue(); ++j) {
    int ones = 0;
    for (BsId i = 0; i < n_bs(); ++i) {
      const double v = at(i, j);
      if (v == 1.0) {
        ++ones;
        out[j] = i;
      } else if (v != 0.0) {
        return std::nullopt;
      }
    }
    if (ones != 1) return std::nullopt;
  }
  return out;
}

std::string Violation::describe() const {
  switch (kind) {
    case Kind::NonBinary:
      return "non-binary entry at BS " + std::to_string(bs) + ", UE " + std::to_string(ue);
    case Kind::NotSingleAssociation:
      return "UE " + std::to_string(ue) + " is not associated with exactly one candidate BS";
    case Kind::OutsideCandidates:
      return "UE " + std::to_string(ue) + " associated with BS " + std::to_string(bs) + " outside its candidate set";
    case Kind::OverCapacity:
      return "SBS " + std::to_string(bs) + " serves more UEs than its beam budget";
  }
  return "unknown violation";
}

std::optional<Violation> check_feasible(const AssociationMatrix& assoc, const CandidateSets& candidate_sets,
                                        std::span<const int> beam_budget) {
  using K = Violation::Kind;
  for (BsId i = 0; i < assoc.n_bs(); ++i)
    for (std::size_t j = 0; j < assoc.n_ue(); ++j) {
      const double v = assoc.at(i, j);
      if (v != 0.0 && v != 1.0) return Violation{K::NonBinary, i, j};
    }
  for (std::size_t j = 0; j < assoc.n_ue(); ++j) {
    const auto& cand = candidate_sets.at(j);
    int ones = 0;
    for (BsId i = 0; i < assoc.n_bs(); ++i) {
      if (assoc.at(i, j) != 1.0) continue;
      if (std::find(cand.begin(), cand.end(), i) == cand.end()) return Violation{K::OutsideCandidates, i, j};
      ++ones;
    }
    if (ones != 1) return Violation{K::NotSingleAssociation, -1, j};
  }
  for (BsId i = 1; i < assoc.n_bs(); ++i) {
    double load = 0.0;
    for (std::size_t j = 0; j < assoc.n_ue(); ++j) load += assoc.at(i, j);
    if (load > beam_budget[static_cast<std::size_t>(i - 1)]) return Violation{K::OverCapacity, i, 0};
  }
  return std::nullopt;
}

std::optional<Violation> check_feasible(std::span<const BsId> assignment, const CandidateSets& candidate_sets,
                                        std::span<const int> beam_budget) {
  BsId max_bs = static_cast<BsId>(beam_budget.size());
  for (BsId a : assignment)
    if (a < 0 || a > max_bs) return Violation{Violation::Kind::OutsideCandidates, a, 0};
  return check_feasible(AssociationMatrix::from_assignment(assignment, max_bs + 1), candidate_sets, beam_budget);
}

UtilityReport network_utility(const AssociationMatrix& assoc, const Matrix& rates, std::span<const double> demands,
                              double alpha) {
  if (rates.rows() != static_cast<std::size_t>(assoc.n_bs()) || rates.cols() != assoc.n_ue() ||
      demands.size() != assoc.n_ue())
    throw ShapeError("rates/demands do not match the association matrix");
  UtilityReport rep;
  rep.alpha = alpha;
  rep.per_ue_terms.assign(assoc.n_ue(), 0.0);
  rep.kappas.assign(assoc.n_ue(), 0.0);
  for (std::size_t j = 0; j < assoc.n_ue(); ++j) {
    int ones = 0;
    for (BsId i = 0; i < assoc.n_bs(); ++i) {
      const double x = assoc.at(i, j);
      if (x == 0.0) continue;
      if (x != 1.0) throw InfeasibleError(Violation{Violation::Kind::NonBinary, i, j}.describe());
      ++ones;
      const double r = rates(static_cast<std::size_t>(i), j);
      rep.kappas[j] = qos_satisfaction(r, demands[j]);
      rep.per_ue_terms[j] = alpha_fair(effective_rate(r, demands[j]), alpha);
    }
    if (ones != 1) throw InfeasibleError(Violation{Violation::Kind::NotSingleAssociation, -1, j}.describe());
    rep.total += rep.per_ue_terms[j];
  }
  return rep;
}

UtilityReport assignment_utility(std::span<const double> served_rates, std::span<const double> demands, double alpha) {
  if (served_rates.size() != demands.size()) throw ShapeError("rates and demands differ in length");
  UtilityReport rep;
  rep.alpha = alpha;
  rep.per_ue_terms.resize(served_rates.size());
  rep.kappas.resize(served_rates.size());
  for (std::size_t j = 0; j < served_rates.size(); ++j) {
    rep.kappas[j] = qos_satisfaction(served_rates[j], demands[j]);
    rep.per_ue_terms[j] = alpha_fair(effective_rate(served_rates[j], demands[j]), alpha);
    rep.total += rep.per_ue_terms[j];
  }
  return rep;
}

double AssociationProblem::value(std::span<const BsId> assignment) const { return report(assignment).total; }

UtilityReport AssociationProblem::report(std::span<const BsId> assignment) const {
  const auto r = rates(assignment);
  return assignment_utility(r, demands, alpha);
}

RateEvaluator table_rates(Matrix rates) {
  return [rates = std::move(rates)](std::span<const BsId> a) {
    std::vector<double> out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = rates(static_cast<std::size_t>(a[j]), j);
    return out;
  };
}

namespace {

struct Enumeration {
  std::vector<std::size_t> radix;
  std::size_t total = 1;
};

Enumeration prepare(const AssociationProblem& problem, const OracleLimits& limits) {
  const std::size_t k = problem.n_ue();
  std::size_t widest = 0;
  for (const auto& c : problem.candidate_sets) widest = std::max(widest, c.size());
  if (k == 0 || k > limits.max_ue || widest > limits.max_candidates)
    throw OracleRefused("oracle refused: K=" + std::to_string(k) + " (max " + std::to_string(limits.max_ue) +
                        "), widest candidate set " + std::to_string(widest) + " (max " +
                        std::to_string(limits.max_candidates) + ")");
  Enumeration e;
  for (const auto& c : problem.candidate_sets) {
    e.radix.push_back(c.size());
    e.total *= c.size();
  }
  return e;
}

// UE 0 is the most significant digit, so increasing index order is
// lexicographic order over assignment vectors.
void decode(const AssociationProblem& problem, const Enumeration& e, std::size_t index, std::vector<BsId>& out) {
  for (std::size_t j = e.radix.size(); j-- > 0;) {
    out[j] = problem.candidate_sets[j][index % e.radix[j]];
    index /= e.radix[j];
  }
}

bool within_capacity(const AssociationProblem& problem, std::span<const BsId> a, std::vector<int>& load) {
  std::fill(load.begin(), load.end(), 0);
  for (BsId bs : a) {
    if (bs == kMacroBs) continue;
    const auto i = static_cast<std::size_t>(bs - 1);
    if (++load[i] > problem.beam_budget[i]) return false;
  }
  return true;
}

void scan(const AssociationProblem& problem, const Enumeration& e, std::size_t begin, std::size_t end,
          OracleResult& best) {
  std::vector<BsId> a(problem.n_ue());
  std::vector<int> load(problem.beam_budget.size());
  for (std::size_t idx = begin; idx < end; ++idx) {
    decode(problem, e, idx, a);
    if (!within_capacity(problem, a, load)) continue;
    ++best.feasible_count;
    const double v = problem.value(a);
    if (v > best.value) {
      best.value = v;
      best.assignment = a;
    }
  }
}

}  // namespace

OracleResult exact_oracle_serial(const AssociationProblem& problem, OracleLimits limits) {
  const auto e = prepare(problem, limits);
  OracleResult best;
  scan(problem, e, 0, e.total, best);
  return best;
}

OracleResult exact_oracle(const AssociationProblem& problem, OracleLimits limits) {
  const auto e = prepare(problem, limits);
  const std::size_t chunks = std::min<std::size_t>(e.total, 4 * static_cast<std::size_t>(omp_get_max_threads()));
  std::vector<OracleResult> partial(chunks);
#pragma omp parallel for schedule(dynamic, 1) if (chunks > 1)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = e.total * c / chunks;
    const std::size_t end = e.total * (c + 1) / chunks;
    scan(problem, e, begin, end, partial[c]);
  }
  OracleResult best;
  for (auto& p : partial) {
    best.feasible_count += p.feasible_count;
    if (p.value > best.value) {
      best.value = p.value;
      best.assignment = std::move(p.assignment);
    }
  }
  return best;
}

}  // namespace tua
