#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "congestfair/competitive_frac.hpp"
#include "congestfair/error.hpp"
#include "congestfair/fixed_point.hpp"
#include "congestfair/guarantees.hpp"
#include "congestfair/problem.hpp"

namespace congestfair {

// Weighted analog of the fractional competitive solution. Uniqueness is only
// guaranteed when the profile is f-crowded: every demanded, occupied post
// carries strictly more load than any single demander's weight.
struct WeightedCompetitiveSolution {
  FractionalCongestion sigma;
  std::vector<DemandSet> demands;
  SemiStochasticMatrix matrix;
  bool f_crowded = false;
};

inline WeightedCompetitiveSolution solve_weighted_competitive(
    const Problem& problem) {
  if (problem.anonymous())
    throw ValidationError(
        "solve_weighted_competitive needs a weighted problem");
  detail::FpInstance inst = detail::build_instance(problem);
  detail::FpOutcome out = detail::solve_fixed_point(inst);

  WeightedCompetitiveSolution sol;
  sol.sigma.load = out.solution.sigma;
  sol.matrix = detail::matrix_from_group_flow(problem, inst, out.solution);
  for (int i = 0; i < problem.agent_count(); ++i)
    sol.demands.push_back(fractional_demand(problem, sol.sigma.load, i));
  detail::check_solution_exact(problem, sol.sigma.load, sol.matrix);

  sol.f_crowded = true;
  for (int a = 0; a < problem.post_count(); ++a) {
    if (sol.sigma.load[a] == 0) continue;
    for (int i = 0; i < problem.agent_count(); ++i)
      if (sol.demands[i].contains(a) &&
          !(sol.sigma.load[a] > problem.weight(i)))
        sol.f_crowded = false;
  }
  return sol;
}

// Expresses the probability matrix as a mixture of deterministic matrices
// with support inside it (no column rounding here: selections are free, so
// each peel removes the row-maximum entries and zeroes at least one of them).
inline Lottery birkhoff_decompose(const Problem& problem,
                                  const WeightedCompetitiveSolution& solution,
                                  int rotate = 0) {
  int n = problem.agent_count(), m = problem.post_count();
  SemiStochasticMatrix cur = solution.matrix;
  Lottery out;
  Rational remaining = 1;

  for (int guard = 0; guard <= n * m + 1; ++guard) {
    Assignment asg;
    asg.post_of.assign(n, -1);
    Rational theta;
    bool have = false;
    for (int i = 0; i < n; ++i) {
      int pick = -1;
      for (int off = 0; off < m; ++off) {
        int a = (off + rotate) % m;
        if (cur.at(i, a) > 0 && (pick == -1 || cur.at(i, a) > cur.at(i, pick)))
          pick = a;
      }
      if (pick == -1) throw SolverError("matrix row vanished");
      asg.post_of[i] = pick;
      if (!have || cur.at(i, pick) < theta) theta = cur.at(i, pick);
      have = true;
    }
    if (theta == 1) {
      out.entries.push_back({asg, remaining});
      return out;
    }
    out.entries.push_back({asg, remaining * theta});
    Rational keep = Rational(1) - theta;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        Rational moved = (asg.post_of[i] == a) ? theta : Rational(0);
        cur.at(i, a) = (cur.at(i, a) - moved) / keep;
      }
    remaining *= keep;
  }
  throw SolverError("birkhoff decomposition did not terminate");
}

inline std::vector<Lottery> birkhoff_variants(
    const Problem& problem, const WeightedCompetitiveSolution& solution,
    int limit) {
  std::vector<Lottery> out;
  for (int r = 0; r < problem.post_count() && static_cast<int>(out.size()) < limit;
       ++r) {
    Lottery cand = birkhoff_decompose(problem, solution, r);
    bool fresh = true;
    for (const auto& seen : out) {
      if (seen.entries.size() != cand.entries.size()) continue;
      bool same = true;
      for (std::size_t k = 0; k < cand.entries.size(); ++k)
        if (!(seen.entries[k].assignment == cand.entries[k].assignment) ||
            seen.entries[k].probability != cand.entries[k].probability) {
          same = false;
          break;
        }
      if (same) {
        fresh = false;
        break;
      }
    }
    if (fresh) out.push_back(std::move(cand));
  }
  return out;
}

// Per-entry top-fairness audit of a lottery: which realizations violate the
// cap profile, by how much congestion, and with what total probability.
struct LotteryFairnessEntry {
  Rational probability;
  bool fair = true;
  Rational worst_margin;  // largest (load - cap) over agents; <= 0 when fair
};

struct LotteryFairnessReport {
  std::vector<LotteryFairnessEntry> entries;
  Rational violation_probability;
};

inline LotteryFairnessReport lottery_fairness_report(
    const Problem& problem, const PrefixProfile& profile,
    const Lottery& lottery) {
  LotteryFairnessReport report;
  report.violation_probability = 0;
  for (const auto& e : lottery.entries) {
    auto load = congestion_profile(problem, e.assignment);
    LotteryFairnessEntry r;
    r.probability = e.probability;
    bool first = true;
    for (int i = 0; i < problem.agent_count(); ++i) {
      int a = e.assignment.post_of[i];
      Rational margin = load[a] - profile[i].caps[a];
      if (first || margin > r.worst_margin) r.worst_margin = margin;
      first = false;
    }
    r.fair = r.worst_margin <= 0;
    if (!r.fair) report.violation_probability += e.probability;
    report.entries.push_back(std::move(r));
  }
  return report;
}

}  // namespace congestfair
