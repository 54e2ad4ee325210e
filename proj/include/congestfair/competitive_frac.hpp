#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "congestfair/competitive_det.hpp"
#include "congestfair/error.hpp"
#include "congestfair/fixed_point.hpp"
#include "congestfair/flow.hpp"
#include "congestfair/guarantees.hpp"
#include "congestfair/problem.hpp"

namespace congestfair {

// Demand against an expected congestion profile: argmax of the interpolated
// cardinal utility with the price of a post floored at 1 (anonymous) or at
// the agent's own weight (weighted).
inline DemandSet fractional_demand(const Problem& problem,
                                   const std::vector<Rational>& sigma,
                                   int agent) {
  Rational floor = detail::clamp_floor(problem, agent);
  DemandSet d;
  d.agent = agent;
  Rational best_value;
  for (int a = 0; a < problem.post_count(); ++a) {
    Rational v = problem.utility(agent, a, rational_max(sigma[a], floor));
    if (d.posts.empty() || v > best_value) {
      d.posts.assign(1, a);
      best_value = v;
    } else if (v == best_value) {
      d.posts.push_back(a);
    }
  }
  return d;
}

// Realizability of a congestion profile from given demand sets: a
// semi-stochastic matrix with support inside the demands whose weighted
// column sums hit sigma exactly, or nothing if the transportation problem is
// infeasible.
inline std::optional<SemiStochasticMatrix> realize_fractional(
    const Problem& problem, const std::vector<Rational>& sigma,
    const std::vector<DemandSet>& demands) {
  int n = problem.agent_count(), m = problem.post_count();
  std::vector<Rational> supplies;
  std::vector<detail::TransportEdge> edges;
  for (int i = 0; i < n; ++i) {
    supplies.push_back(problem.weight(i));
    for (int a : demands[i].posts) edges.push_back({i, a});
  }
  auto routed = detail::route_transport(supplies, sigma, edges);
  if (!routed) return std::nullopt;
  SemiStochasticMatrix pi = SemiStochasticMatrix::zero(n, m);
  for (std::size_t k = 0; k < edges.size(); ++k)
    pi.at(edges[k].row, edges[k].col) = (*routed)[k] / problem.weight(edges[k].row);
  return pi;
}

// The unique competitive expected congestion profile (anonymous model),
// with its demand correspondence and one realizing matrix. Posts whose load
// does not exceed 1 are flagged: their exact value may legitimately differ
// across equally valid answers.
struct CompetitiveSolution {
  FractionalCongestion sigma;
  std::vector<DemandSet> demands;
  SemiStochasticMatrix matrix;
  std::vector<int> ambiguous_posts;
};

namespace detail {

inline SemiStochasticMatrix matrix_from_group_flow(const Problem& problem,
                                                   const FpInstance& inst,
                                                   const FpSolution& sol) {
  SemiStochasticMatrix pi =
      SemiStochasticMatrix::zero(problem.agent_count(), problem.post_count());
  for (std::size_t t = 0; t < inst.groups.size(); ++t)
    for (int member : inst.groups[t].members)
      for (int a = 0; a < problem.post_count(); ++a)
        pi.at(member, a) = sol.group_flow[t][a] / inst.groups[t].mass;
  return pi;
}

inline void check_solution_exact(const Problem& problem,
                                 const std::vector<Rational>& sigma,
                                 const SemiStochasticMatrix& pi) {
  int n = problem.agent_count(), m = problem.post_count();
  Rational total = 0;
  for (int a = 0; a < m; ++a) total += sigma[a];
  if (total != (problem.anonymous() ? Rational(n) : problem.total_weight()))
    throw SolverError("sigma does not sum to the total congestion");
  for (int i = 0; i < n; ++i) {
    Rational row = 0;
    for (int a = 0; a < m; ++a) row += pi.at(i, a);
    if (row != 1) throw SolverError("matrix row does not sum to 1");
  }
  for (int a = 0; a < m; ++a) {
    Rational col = 0;
    for (int i = 0; i < n; ++i) col += problem.weight(i) * pi.at(i, a);
    if (col != sigma[a]) throw SolverError("matrix column misses sigma");
  }
  for (int i = 0; i < n; ++i) {
    DemandSet d = fractional_demand(problem, sigma, i);
    for (int a = 0; a < m; ++a)
      if (pi.at(i, a) > 0 && !d.contains(a))
        throw SolverError("matrix support leaves the demand set");
  }
}

}  // namespace detail

inline CompetitiveSolution solve_fractional_competitive(
    const Problem& problem) {
  if (!problem.anonymous())
    throw ValidationError(
        "solve_fractional_competitive needs an anonymous problem");
  for (int i = 0; i < problem.agent_count(); ++i)
    if (!problem.has_cardinal(i))
      throw ValidationError("agent " + problem.agent_label(i) +
                            " needs a cardinal utility");
  detail::FpInstance inst = detail::build_instance(problem);
  detail::FpOutcome out = detail::solve_fixed_point(inst);

  CompetitiveSolution sol;
  sol.sigma.load = out.solution.sigma;
  sol.matrix = detail::matrix_from_group_flow(problem, inst, out.solution);
  for (int i = 0; i < problem.agent_count(); ++i)
    sol.demands.push_back(fractional_demand(problem, sol.sigma.load, i));
  for (int a = 0; a < problem.post_count(); ++a)
    if (sol.sigma.load[a] <= 1) sol.ambiguous_posts.push_back(a);
  detail::check_solution_exact(problem, sol.sigma.load, sol.matrix);
  return sol;
}

// Worst utility loss from one extra unit of congestion; the scale of every
// approximation bound below.
inline Rational max_marginal_loss(const Problem& problem, int agent) {
  const UtilityTable& t = problem.preference(agent).table();
  Rational best = 0;
  for (int a = 0; a < t.posts; ++a)
    for (int s = 1; s < t.slots; ++s)
      best = rational_max(best, t.at(a, s) - t.at(a, s + 1));
  return best;
}

// A lottery over deterministic assignments implementing sigma: expected
// congestion equals sigma exactly, every agent always sits inside their
// demand, and each realized load rounds sigma up or down.
struct ImplementationLottery {
  Lottery lottery;
  FractionalCongestion sigma;
};

namespace detail {

// Extracts one deterministic matrix compatible with the current fractional
// state: unit rows inside the support, column sums matching the current
// column totals rounded to a neighbouring integer.
inline std::optional<Assignment> rounding_selection(
    const SemiStochasticMatrix& cur, const std::vector<Rational>& cols,
    int rotate) {
  int n = cur.agents, m = cur.posts;
  std::vector<Rational> supplies(n, Rational(1));
  std::vector<Rational> lo(m), hi(m);
  for (int a = 0; a < m; ++a) {
    lo[a] = Rational(floor_rational(cols[a]));
    hi[a] = Rational(ceil_rational(cols[a]));
  }
  std::vector<TransportEdge> edges;
  for (int i = 0; i < n; ++i)
    for (int off = 0; off < m; ++off) {
      int a = (off + rotate) % m;
      if (cur.at(i, a) > 0) edges.push_back({i, a});
    }
  auto routed = route_transport_bounded(supplies, lo, hi, edges);
  if (!routed) return std::nullopt;
  Assignment asg;
  asg.post_of.assign(n, -1);
  for (std::size_t k = 0; k < edges.size(); ++k)
    if ((*routed)[k] == 1) asg.post_of[edges[k].row] = edges[k].col;
  for (int i = 0; i < n; ++i)
    if (asg.post_of[i] < 0) return std::nullopt;
  return asg;
}

}  // namespace detail

// Peels rounding-compatible deterministic assignments off the probability
// matrix until it is exhausted. Each peel takes the largest probability that
// keeps the residual inside the rounding polytope, so an entry or a column
// is pinned every round and the lottery stays short.
inline ImplementationLottery decompose(const Problem& problem,
                                       const CompetitiveSolution& solution,
                                       int rotate = 0) {
  int n = problem.agent_count(), m = problem.post_count();
  SemiStochasticMatrix cur = solution.matrix;
  const std::vector<Rational>& sigma = solution.sigma.load;

  ImplementationLottery out;
  out.sigma = solution.sigma;
  Rational remaining = 1;

  std::vector<Rational> lo(m), hi(m);
  for (int a = 0; a < m; ++a) {
    lo[a] = Rational(floor_rational(sigma[a]));
    hi[a] = Rational(ceil_rational(sigma[a]));
  }

  for (int guard = 0; guard <= n * m + m + 1; ++guard) {
    bool deterministic = true;
    for (int i = 0; i < n && deterministic; ++i)
      for (int a = 0; a < m; ++a)
        if (cur.at(i, a) != 0 && cur.at(i, a) != 1) {
          deterministic = false;
          break;
        }
    if (deterministic) {
      Assignment asg;
      asg.post_of.assign(n, -1);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a)
          if (cur.at(i, a) == 1) asg.post_of[i] = a;
      out.lottery.entries.push_back({asg, remaining});
      return out;
    }

    std::vector<Rational> cols(m, Rational(0));
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i) cols[a] += cur.at(i, a);
    auto asg = detail::rounding_selection(cur, cols, rotate);
    if (!asg)
      throw SolverError("no rounding-compatible assignment in the support");

    // largest step keeping the rescaled residual inside the polytope
    Rational theta;
    bool have = false;
    auto bound = [&](const Rational& b) {
      if (!have || b < theta) theta = b;
      have = true;
    };
    for (int i = 0; i < n; ++i) bound(cur.at(i, asg->post_of[i]));
    for (int a = 0; a < m; ++a) {
      Rational e(0);
      for (int i = 0; i < n; ++i)
        if (asg->post_of[i] == a) e += 1;
      if (e > lo[a]) bound((cols[a] - lo[a]) / (e - lo[a]));
      if (e < hi[a]) bound((hi[a] - cols[a]) / (hi[a] - e));
    }
    if (!have || theta <= 0)
      throw SolverError("rounding decomposition stalled");
    if (theta >= 1) theta = 1;

    out.lottery.entries.push_back({*asg, remaining * theta});
    if (theta == 1) return out;
    Rational keep = Rational(1) - theta;
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < m; ++a) {
        Rational moved = (asg->post_of[i] == a) ? theta : Rational(0);
        cur.at(i, a) = (cur.at(i, a) - moved) / keep;
      }
    }
    remaining *= keep;
  }
  throw SolverError("rounding decomposition did not terminate");
}

// Alternative lotteries for the same solution, produced by rotating the
// deterministic edge preference inside the peeling step.
inline std::vector<ImplementationLottery> decompose_variants(
    const Problem& problem, const CompetitiveSolution& solution, int limit) {
  std::vector<ImplementationLottery> out;
  for (int r = 0; r < problem.post_count() && static_cast<int>(out.size()) < limit;
       ++r) {
    ImplementationLottery cand = decompose(problem, solution, r);
    bool fresh = true;
    for (const auto& seen : out) {
      if (seen.lottery.entries.size() != cand.lottery.entries.size()) continue;
      bool same = true;
      for (std::size_t k = 0; k < cand.lottery.entries.size(); ++k)
        if (!(seen.lottery.entries[k].assignment ==
              cand.lottery.entries[k].assignment) ||
            seen.lottery.entries[k].probability !=
                cand.lottery.entries[k].probability) {
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

// Per-clause verification of the approximation guarantees carried by an
// implementation lottery: near-fairness within one unit, bounded utility
// spread, near-competitiveness, near-efficiency, and the efficiency floor
// when every post is genuinely congested.
struct BoundsReport {
  bool near_fairness = false;      // realized load <= best cap + 1
  bool utility_spread = false;     // |U_k - U_l| <= 2 delta
  bool near_competitiveness = false;
  bool near_efficiency = false;    // no assignment beats U_k + 2 delta + eps
  bool efficiency_floor = true;    // U_k > U_c - delta (when applicable)
  bool floor_applicable = false;
  std::vector<std::vector<Rational>> fairness_margin;  // entry x agent

  bool all_passed() const {
    return near_fairness && utility_spread && near_competitiveness &&
           near_efficiency && efficiency_floor;
  }
};

inline BoundsReport verify_approximation_bounds(
    const Problem& problem, const CompetitiveSolution& solution,
    const ImplementationLottery& lottery,
    const Rational& eps = Rational(1, 1000000)) {
  int n = problem.agent_count(), m = problem.post_count();
  const auto& entries = lottery.lottery.entries;
  int K = static_cast<int>(entries.size());
  BoundsReport report;

  std::vector<Rational> delta(n);
  for (int i = 0; i < n; ++i) delta[i] = max_marginal_loss(problem, i);

  std::vector<std::vector<Rational>> load(K), util(K, std::vector<Rational>(n));
  for (int k = 0; k < K; ++k) {
    load[k] = congestion_profile(problem, entries[k].assignment);
    for (int i = 0; i < n; ++i)
      util[k][i] =
          assignment_utility(problem, entries[k].assignment, load[k], i);
  }

  // Near-fairness: some acceptable cap profile covers the realized load up
  // to one extra unit.
  report.near_fairness = true;
  report.fairness_margin.assign(K, std::vector<Rational>(n, Rational(0)));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i) {
      int a = entries[k].assignment.post_of[i];
      Rational margin = load[k][a] - max_prefix_cap(problem, i, a);
      report.fairness_margin[k][i] = margin;
      if (margin > 1) report.near_fairness = false;
    }

  report.utility_spread = true;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k)
      for (int l = k + 1; l < K; ++l) {
        Rational diff = util[k][i] - util[l][i];
        if (diff < 0) diff = -diff;
        if (diff > 2 * delta[i]) report.utility_spread = false;
      }

  report.near_competitiveness = true;
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i)
      for (int x = 0; x < m; ++x) {
        Rational price = rational_max(load[k][x], Rational(1));
        if (util[k][i] < problem.utility(i, x, price) - 2 * delta[i])
          report.near_competitiveness = false;
      }

  // Near-efficiency: scan all congestion profiles; a beating assignment must
  // give every agent utility above their shifted target, which is a
  // transportation feasibility question per profile.
  report.near_efficiency = true;
  for (int k = 0; k < K && report.near_efficiency; ++k) {
    std::vector<Rational> target(n);
    for (int i = 0; i < n; ++i) target[i] = util[k][i] + 2 * delta[i] + eps;
    std::vector<int> s(m, 0);
    auto rec = [&](auto&& self, int a, int left) -> bool {
      if (a == m - 1) {
        s[a] = left;
        std::vector<Rational> supplies(n, Rational(1));
        std::vector<Rational> demand(m);
        for (int x = 0; x < m; ++x) demand[x] = s[x];
        std::vector<detail::TransportEdge> edges;
        for (int i = 0; i < n; ++i)
          for (int x = 0; x < m; ++x)
            if (s[x] >= 1 && problem.utility(i, x, Rational(s[x])) >= target[i])
              edges.push_back({i, x});
        return detail::route_transport(supplies, demand, edges).has_value();
      }
      for (int v = 0; v <= left; ++v) {
        s[a] = v;
        if (self(self, a + 1, left - v)) return true;
      }
      return false;
    };
    if (rec(rec, 0, n)) report.near_efficiency = false;
  }

  // Efficiency floor, when sigma >= 1 everywhere: every realized utility
  // stays strictly above the common demand-set utility minus delta.
  bool applicable = true;
  for (int a = 0; a < m; ++a)
    if (solution.sigma.load[a] < 1) applicable = false;
  report.floor_applicable = applicable;
  if (applicable) {
    report.efficiency_floor = true;
    for (int i = 0; i < n; ++i) {
      const DemandSet& d = solution.demands[i];
      Rational uc =
          problem.utility(i, d.posts[0], solution.sigma.load[d.posts[0]]);
      for (int k = 0; k < K; ++k)
        if (!(util[k][i] > uc - delta[i])) report.efficiency_floor = false;
    }
  }
  return report;
}

}  // namespace congestfair
