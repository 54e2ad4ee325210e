#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/guarantees.hpp"
#include "congestfair/problem.hpp"

namespace congestfair {

// The posts an agent likes best when each post is priced at its current
// congestion, floored at the price the agent would create alone.
struct DemandSet {
  int agent = -1;
  std::vector<int> posts;  // sorted

  bool contains(int post) const {
    return std::binary_search(posts.begin(), posts.end(), post);
  }
};

namespace detail {

inline Rational clamp_floor(const Problem& problem, int agent) {
  return problem.anonymous() ? Rational(1) : problem.weight(agent);
}

}  // namespace detail

// Demand at a deterministic congestion profile: argmax over posts of the
// allocation (x, load_x clamped below by 1 or w_i).
inline DemandSet competitive_demand(const Problem& problem,
                                    const std::vector<Rational>& load,
                                    int agent) {
  Rational floor = detail::clamp_floor(problem, agent);
  int m = problem.post_count();
  DemandSet d;
  d.agent = agent;
  int best = 0;
  Rational best_load = rational_max(load[0], floor);
  d.posts.push_back(0);
  for (int a = 1; a < m; ++a) {
    Rational la = rational_max(load[a], floor);
    Order o = problem.compare(agent, a, la, best, best_load);
    if (o == Order::better) {
      d.posts.assign(1, a);
      best = a;
      best_load = la;
    } else if (o == Order::equal) {
      d.posts.push_back(a);
    }
  }
  return d;
}

// Competitiveness: every agent's own post is in their demand at the
// assignment's congestion profile (empty posts priced at the clamp floor).
inline bool is_competitive(const Problem& problem, const Assignment& asg) {
  auto load = congestion_profile(problem, asg);
  for (int i = 0; i < problem.agent_count(); ++i) {
    DemandSet d = competitive_demand(problem, load, i);
    if (!d.contains(asg.post_of[i])) return false;
  }
  return true;
}

namespace detail {

// All ways to place n agents so that the congestion profile is exactly
// `target` and every agent sits inside their demand at `target`.
inline void placements_for_profile(const Problem& problem,
                                   const std::vector<Rational>& target,
                                   const std::vector<DemandSet>& demands,
                                   unsigned long long limit,
                                   std::vector<Assignment>& out) {
  int m = problem.post_count(), n = problem.agent_count();
  Assignment asg;
  asg.post_of.assign(n, -1);
  std::vector<Rational> load(m, Rational(0));
  auto rec = [&](auto&& self, int i) -> void {
    if (i == n) {
      if (load != target) return;
      if (out.size() >= limit)
        throw LimitError("competitive search limit exceeded", out.size());
      out.push_back(asg);
      return;
    }
    for (int a : demands[i].posts) {
      Rational next = load[a] + problem.weight(i);
      if (next > target[a]) continue;
      load[a] = next;
      asg.post_of[i] = a;
      self(self, i + 1);
      asg.post_of[i] = -1;
      load[a] = next - problem.weight(i);
    }
  };
  rec(rec, 0);
}

}  // namespace detail

// Exhaustive search for competitive assignments. Anonymous problems iterate
// over candidate congestion profiles (demand depends only on the profile) and
// realize each by placement search; weighted problems enumerate assignments
// directly. An empty result certifies nonexistence at desk scale.
inline std::vector<Assignment> find_competitive(
    const Problem& problem, unsigned long long limit = 100000) {
  int m = problem.post_count(), n = problem.agent_count();
  std::vector<Assignment> found;

  if (problem.anonymous()) {
    // compositions of n over m posts, lexicographic
    std::vector<int> s(m, 0);
    auto rec = [&](auto&& self, int a, int left) -> void {
      if (a == m - 1) {
        s[a] = left;
        std::vector<Rational> load(s.begin(), s.end());
        std::vector<DemandSet> demands;
        demands.reserve(n);
        for (int i = 0; i < n; ++i)
          demands.push_back(competitive_demand(problem, load, i));
        detail::placements_for_profile(problem, load, demands, limit, found);
        return;
      }
      for (int k = 0; k <= left; ++k) {
        s[a] = k;
        self(self, a + 1, left - k);
      }
    };
    rec(rec, 0, n);
    return found;
  }

  Assignment asg;
  asg.post_of.assign(n, 0);
  unsigned long long visited = 0;
  while (true) {
    if (++visited > 400'000'000ULL)
      throw LimitError("assignment space too large", found.size());
    if (is_competitive(problem, asg)) {
      if (found.size() >= limit)
        throw LimitError("competitive search limit exceeded", found.size());
      found.push_back(asg);
    }
    int i = n - 1;
    while (i >= 0 && asg.post_of[i] == m - 1) asg.post_of[i--] = 0;
    if (i < 0) break;
    ++asg.post_of[i];
  }
  return found;
}

// Agreement report for two competitive assignments: congestion profiles may
// differ only at posts occupied by at most one agent, and every agent must be
// indifferent between their two allocations.
struct CongestionMismatch {
  int post;
  Rational load1, load2;
};

struct WelfareMismatch {
  int agent;
  Order first_versus_second;
};

struct EquivalenceReport {
  std::vector<CongestionMismatch> congestion;
  std::vector<WelfareMismatch> welfare;

  bool consistent() const { return congestion.empty() && welfare.empty(); }
};

inline EquivalenceReport verify_competitive_equivalence(const Problem& problem,
                                                        const Assignment& p1,
                                                        const Assignment& p2) {
  EquivalenceReport report;
  auto load1 = congestion_profile(problem, p1);
  auto load2 = congestion_profile(problem, p2);
  auto cnt1 = occupancy_counts(problem, p1);
  auto cnt2 = occupancy_counts(problem, p2);
  for (int a = 0; a < problem.post_count(); ++a) {
    if (load1[a] == load2[a]) continue;
    if (cnt1[a] <= 1 && cnt2[a] <= 1) continue;  // the allowed slack
    report.congestion.push_back({a, load1[a], load2[a]});
  }
  for (int i = 0; i < problem.agent_count(); ++i) {
    Order o = problem.compare(i, p1.post_of[i], load1[p1.post_of[i]],
                              p2.post_of[i], load2[p2.post_of[i]]);
    if (o != Order::equal) report.welfare.push_back({i, o});
  }
  return report;
}

// Strict Pareto dominance: everyone weakly better at `q`, someone strictly.
inline bool pareto_dominates(const Problem& problem, const Assignment& q,
                             const Assignment& p) {
  auto load_q = congestion_profile(problem, q);
  auto load_p = congestion_profile(problem, p);
  bool strict = false;
  for (int i = 0; i < problem.agent_count(); ++i) {
    Order o = problem.compare(i, q.post_of[i], load_q[q.post_of[i]],
                              p.post_of[i], load_p[p.post_of[i]]);
    if (o == Order::worse) return false;
    if (o == Order::better) strict = true;
  }
  return strict;
}

// Exhaustive Pareto-improvement search; returns a dominating assignment or
// nothing.
inline std::optional<Assignment> find_dominator(
    const Problem& problem, const Assignment& p,
    unsigned long long node_limit = 400'000'000ULL) {
  int m = problem.post_count(), n = problem.agent_count();
  Assignment q;
  q.post_of.assign(n, 0);
  unsigned long long visited = 0;
  while (true) {
    if (++visited > node_limit)
      throw LimitError("dominator search limit exceeded", 0);
    if (pareto_dominates(problem, q, p)) return q;
    int i = n - 1;
    while (i >= 0 && q.post_of[i] == m - 1) q.post_of[i--] = 0;
    if (i < 0) break;
    ++q.post_of[i];
  }
  return std::nullopt;
}

// Every post hosts two or more agents, or none.
inline bool is_crowded(const Problem& problem, const Assignment& asg) {
  auto cnt = occupancy_counts(problem, asg);
  for (int c : cnt)
    if (c == 1) return false;
  return true;
}

// Semi-strictness: no agent is ever indifferent between being alone at one
// post and sharing another with any group containing them. Exponential in n.
inline bool is_semi_strict(const Problem& problem, int max_agents = 12) {
  if (problem.anonymous())
    throw ValidationError("semi-strictness is a weighted property");
  int n = problem.agent_count(), m = problem.post_count();
  if (n > max_agents)
    throw LimitError("semi-strictness scan too large", 0);
  for (int i = 0; i < n; ++i) {
    // all subset weights w_S with i in S
    std::set<Rational> sums;
    std::vector<Rational> acc{problem.weight(i)};
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      std::size_t sz = acc.size();
      for (std::size_t k = 0; k < sz; ++k)
        acc.push_back(acc[k] + problem.weight(j));
    }
    sums.insert(acc.begin(), acc.end());
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        if (a == b) continue;
        for (const Rational& ws : sums)
          if (problem.compare(i, a, problem.weight(i), b, ws) == Order::equal)
            return false;
      }
  }
  return true;
}

// Free-mobility equilibrium: no agent gains by moving to another post, where
// the mover adds their own congestion at the destination.
inline bool is_free_mobility_equilibrium(const Problem& problem,
                                         const Assignment& asg) {
  auto load = congestion_profile(problem, asg);
  for (int i = 0; i < problem.agent_count(); ++i) {
    int cur = asg.post_of[i];
    for (int a = 0; a < problem.post_count(); ++a) {
      if (a == cur) continue;
      if (problem.compare(i, a, load[a] + problem.weight(i), cur, load[cur]) ==
          Order::better)
        return false;
    }
  }
  return true;
}

// Best-response dynamics with an exhaustive fallback. The seed shuffles only
// the sweep order; an equilibrium may not exist in the weighted model, in
// which case nullopt is a legitimate answer.
inline std::optional<Assignment> find_free_mobility_equilibrium(
    const Problem& problem, unsigned seed = 0, int max_sweeps = 1000) {
  int m = problem.post_count(), n = problem.agent_count();
  Assignment asg;
  asg.post_of.assign(n, 0);
  auto load = congestion_profile(problem, asg);

  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    bool moved = false;
    for (int i : order) {
      int cur = asg.post_of[i];
      int best = cur;
      for (int a = 0; a < m; ++a) {
        if (a == cur) continue;
        Rational best_load = (best == cur)
                                 ? load[cur]
                                 : load[best] + problem.weight(i);
        if (problem.compare(i, a, load[a] + problem.weight(i), best,
                            best_load) == Order::better)
          best = a;
      }
      if (best != cur) {
        load[cur] -= problem.weight(i);
        load[best] += problem.weight(i);
        asg.post_of[i] = best;
        moved = true;
      }
    }
    if (!moved) return asg;
  }

  // dynamics cycled; fall back to scanning the assignment space
  Assignment probe;
  probe.post_of.assign(n, 0);
  while (true) {
    if (is_free_mobility_equilibrium(problem, probe)) return probe;
    int i = n - 1;
    while (i >= 0 && probe.post_of[i] == m - 1) probe.post_of[i--] = 0;
    if (i < 0) break;
    ++probe.post_of[i];
  }
  return std::nullopt;
}

}  // namespace congestfair
