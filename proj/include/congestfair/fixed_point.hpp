#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/flow.hpp"
#include "congestfair/linprog.hpp"
#include "congestfair/problem.hpp"

namespace congestfair::detail {

// Clamped utility of one agent group at one post as a piecewise-affine
// function of the post's expected load on [0, total]: constant below the
// clamp floor (an agent never perceives less congestion than it creates
// alone), the cardinal utility above it.
struct PostCurve {
  std::vector<Rational> knot;   // 0 = knot[0] < ... < knot.back() = total
  std::vector<Rational> value;  // utility at each knot

  int segments() const { return static_cast<int>(knot.size()) - 1; }

  // (intercept, slope) of the affine piece on [knot[k], knot[k+1]]
  std::pair<Rational, Rational> piece(int k) const {
    Rational slope =
        (value[k + 1] - value[k]) / (knot[k + 1] - knot[k]);
    Rational intercept = value[k] - slope * knot[k];
    return {intercept, slope};
  }

  Rational eval(const Rational& z) const {
    int k = locate(z);
    auto [c, g] = piece(k);
    return c + g * z;
  }

  int locate(const Rational& z) const {
    for (int k = 0; k + 1 < static_cast<int>(knot.size()); ++k)
      if (z <= knot[k + 1]) return k;
    return segments() - 1;
  }
};

// Agents with identical weight and utility collapse into one group; the
// probability matrix later spreads the group's routing uniformly over its
// members, which keeps outputs symmetric and deterministic.
struct FpGroup {
  Rational mass;
  std::vector<int> members;
  std::vector<PostCurve> curves;  // per post
};

struct FpInstance {
  int posts = 0;
  Rational total;                        // n, or W
  std::vector<FpGroup> groups;
  std::vector<int> group_of;             // agent -> group
  std::vector<std::vector<Rational>> grid;  // per post: merged knots
};

inline PostCurve make_curve_anonymous(const UtilityTable& t, int post, int n) {
  PostCurve c;
  c.knot.push_back(0);
  c.value.push_back(t.at(post, 1));
  for (int s = 1; s <= n; ++s) {
    c.knot.push_back(s);
    c.value.push_back(t.at(post, s));
  }
  return c;
}

inline PostCurve make_curve_weighted(const PiecewiseUtility& u, int post) {
  PostCurve c;
  const auto& pts = u.per_post[post];
  c.knot.push_back(0);
  c.value.push_back(pts.front().value);  // clamp floor: alone-at-post price
  for (const auto& pt : pts) {
    c.knot.push_back(pt.load);
    c.value.push_back(pt.value);
  }
  return c;
}

inline FpInstance build_instance(const Problem& problem) {
  FpInstance inst;
  int m = problem.post_count(), n = problem.agent_count();
  inst.posts = m;
  inst.total = problem.anonymous() ? Rational(n) : problem.total_weight();
  inst.group_of.assign(n, -1);

  // group key: weight plus the full utility data
  std::map<std::pair<Rational, std::vector<std::pair<Rational, Rational>>>,
           int>
      index;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<Rational, Rational>> key;
    if (problem.anonymous()) {
      const auto& t = problem.preference(i).table();
      for (const auto& v : t.value) key.emplace_back(v, Rational(0));
    } else {
      Rational post_tag = 0;
      for (const auto& pts :
           problem.preference(i).piecewise_utility().per_post) {
        key.emplace_back(--post_tag, post_tag);  // post boundary marker
        for (const auto& pt : pts) key.emplace_back(pt.load, pt.value);
      }
    }
    auto full_key = std::make_pair(problem.weight(i), std::move(key));
    auto it = index.find(full_key);
    int gid;
    if (it == index.end()) {
      gid = static_cast<int>(inst.groups.size());
      index.emplace(std::move(full_key), gid);
      FpGroup g;
      g.mass = 0;
      for (int a = 0; a < m; ++a)
        g.curves.push_back(
            problem.anonymous()
                ? make_curve_anonymous(problem.preference(i).table(), a, n)
                : make_curve_weighted(
                      problem.preference(i).piecewise_utility(), a));
      inst.groups.push_back(std::move(g));
    } else {
      gid = it->second;
    }
    inst.group_of[i] = gid;
    inst.groups[gid].mass += problem.weight(i);
    inst.groups[gid].members.push_back(i);
  }

  inst.grid.assign(m, {});
  for (int a = 0; a < m; ++a) {
    std::set<Rational> knots{Rational(0), inst.total};
    for (const auto& g : inst.groups)
      for (const auto& k : g.curves[a].knot) knots.insert(k);
    inst.grid[a].assign(knots.begin(), knots.end());
  }
  return inst;
}

// A cell of the piecewise-affine structure: one grid segment per post plus a
// candidate demand set per group.
struct FpCell {
  std::vector<int> segment;               // per post
  std::vector<std::vector<int>> demand;   // per group, sorted
};

struct FpSolution {
  std::vector<Rational> sigma;
  std::vector<std::vector<int>> group_demand;   // exact demand per group
  std::vector<std::vector<Rational>> group_flow;  // group x post, sums to mass
};

// Exact demand of a group at sigma: argmax of the clamped curves.
inline std::vector<int> exact_demand(const FpInstance& inst, int group,
                                     const std::vector<Rational>& sigma) {
  const auto& g = inst.groups[group];
  std::vector<int> best;
  Rational best_value;
  for (int a = 0; a < inst.posts; ++a) {
    Rational v = g.curves[a].eval(sigma[a]);
    if (best.empty() || v > best_value) {
      best.assign(1, a);
      best_value = v;
    } else if (v == best_value) {
      best.push_back(a);
    }
  }
  return best;
}

// Tries to solve the equilibrium restricted to one cell. The demand pattern
// fixes tie equalities and strict comparisons; the grid segment fixes the
// affine pieces. Returns a fully verified solution or nothing.
inline std::optional<FpSolution> solve_cell(const FpInstance& inst,
                                            const FpCell& cell) {
  int m = inst.posts;
  int T = static_cast<int>(inst.groups.size());

  std::vector<int> demanded(m, 0);
  for (const auto& d : cell.demand)
    for (int a : d) demanded[a] = 1;

  // Affine piece per (group, post) on this cell.
  std::vector<std::vector<std::pair<Rational, Rational>>> aff(
      T, std::vector<std::pair<Rational, Rational>>(m));
  for (int t = 0; t < T; ++t)
    for (int a = 0; a < m; ++a) {
      const auto& grid = inst.grid[a];
      const auto& curve = inst.groups[t].curves[a];
      // the grid refines every curve's knots, so the segment midpoint locates
      // the right piece
      Rational lo = grid[cell.segment[a]], hi = grid[cell.segment[a] + 1];
      int k = curve.locate((lo + hi) / 2);
      aff[t][a] = curve.piece(k);
    }

  // Equality system E sigma = f.
  std::vector<std::vector<Rational>> eq;
  std::vector<Rational> eq_rhs;
  {
    std::vector<Rational> row(m, Rational(1));
    eq.push_back(row);
    eq_rhs.push_back(inst.total);
  }
  for (int a = 0; a < m; ++a)
    if (!demanded[a]) {
      std::vector<Rational> row(m, Rational(0));
      row[a] = 1;
      eq.push_back(row);
      eq_rhs.push_back(0);
    }
  for (int t = 0; t < T; ++t) {
    const auto& d = cell.demand[t];
    for (std::size_t j = 1; j < d.size(); ++j) {
      std::vector<Rational> row(m, Rational(0));
      row[d[0]] += aff[t][d[0]].second;
      row[d[j]] -= aff[t][d[j]].second;
      eq.push_back(row);
      eq_rhs.push_back(aff[t][d[j]].first - aff[t][d[0]].first);
    }
  }

  // Gaussian elimination to a particular solution plus null-space basis.
  int rows = static_cast<int>(eq.size());
  std::vector<int> pivot_col(rows, -1);
  int rank = 0;
  for (int c = 0; c < m && rank < rows; ++c) {
    int p = -1;
    for (int r = rank; r < rows; ++r)
      if (eq[r][c] != 0) {
        p = r;
        break;
      }
    if (p == -1) continue;
    std::swap(eq[p], eq[rank]);
    std::swap(eq_rhs[p], eq_rhs[rank]);
    Rational inv = Rational(1) / eq[rank][c];
    for (int j = 0; j < m; ++j) eq[rank][j] *= inv;
    eq_rhs[rank] *= inv;
    for (int r = 0; r < rows; ++r) {
      if (r == rank || eq[r][c] == 0) continue;
      Rational f = eq[r][c];
      for (int j = 0; j < m; ++j) eq[r][j] -= f * eq[rank][j];
      eq_rhs[r] -= f * eq_rhs[rank];
    }
    pivot_col[rank] = c;
    ++rank;
  }
  for (int r = rank; r < rows; ++r)
    if (eq_rhs[r] != 0) return std::nullopt;  // inconsistent ties

  std::vector<int> free_cols;
  {
    std::vector<bool> is_pivot(m, false);
    for (int r = 0; r < rank; ++r) is_pivot[pivot_col[r]] = true;
    for (int c = 0; c < m; ++c)
      if (!is_pivot[c]) free_cols.push_back(c);
  }
  int d = static_cast<int>(free_cols.size());

  // sigma = base + Null * tau
  std::vector<Rational> base(m, Rational(0));
  std::vector<std::vector<Rational>> null_basis(
      m, std::vector<Rational>(d, Rational(0)));
  for (int r = 0; r < rank; ++r) base[pivot_col[r]] = eq_rhs[r];
  for (int j = 0; j < d; ++j) {
    null_basis[free_cols[j]][j] = 1;
    for (int r = 0; r < rank; ++r)
      null_basis[pivot_col[r]][j] = -eq[r][free_cols[j]];
  }

  // Inequalities: pairs (coeffs over sigma, rhs, strict?), meaning
  // coeffs . sigma >= rhs (strict where flagged).
  struct Ineq {
    std::vector<Rational> coef;
    Rational rhs;
    bool strict;
  };
  std::vector<Ineq> ineqs;
  for (int a = 0; a < m; ++a) {
    const auto& grid = inst.grid[a];
    Ineq lo{std::vector<Rational>(m, Rational(0)), grid[cell.segment[a]],
            false};
    lo.coef[a] = 1;
    ineqs.push_back(lo);
    Ineq hi{std::vector<Rational>(m, Rational(0)),
            -grid[cell.segment[a] + 1], false};
    hi.coef[a] = -1;  // -sigma_a >= -upper
    ineqs.push_back(hi);
  }
  for (int t = 0; t < T; ++t) {
    int d0 = cell.demand[t][0];
    for (int a = 0; a < m; ++a) {
      if (std::binary_search(cell.demand[t].begin(), cell.demand[t].end(), a))
        continue;
      Ineq s{std::vector<Rational>(m, Rational(0)),
             aff[t][a].first - aff[t][d0].first, true};
      s.coef[d0] = aff[t][d0].second;
      s.coef[a] = -aff[t][a].second;
      ineqs.push_back(s);
    }
  }
  // Transportation feasibility (Gale): every post set B must carry at least
  // the mass of the groups demanding only inside B. Only needed as explicit
  // constraints when the tie system leaves freedom.
  if (d > 0) {
    for (unsigned mask = 1; mask + 1 < (1u << m); ++mask) {
      Rational need = 0;
      for (int t = 0; t < T; ++t) {
        bool inside = true;
        for (int a : cell.demand[t])
          if (!(mask >> a & 1)) {
            inside = false;
            break;
          }
        if (inside) need += inst.groups[t].mass;
      }
      if (need == 0) continue;
      Ineq h{std::vector<Rational>(m, Rational(0)), need, false};
      for (int a = 0; a < m; ++a)
        if (mask >> a & 1) h.coef[a] = 1;
      ineqs.push_back(h);
    }
  }

  std::vector<Rational> sigma(m);
  if (d == 0) {
    sigma = base;
    for (const auto& q : ineqs) {
      Rational lhs = 0;
      for (int a = 0; a < m; ++a) lhs += q.coef[a] * sigma[a];
      if (q.strict ? !(lhs > q.rhs) : !(lhs >= q.rhs)) return std::nullopt;
    }
  } else {
    // Maximize the smallest strict slack over the free directions:
    // variables tau = p - q (2d columns) and slack t, t <= 1.
    int vars = 2 * d + 1;
    std::vector<std::vector<Rational>> A;
    std::vector<Rational> b;
    for (const auto& qi : ineqs) {
      // -(coef . Null) tau + strict * t <= coef . base - rhs
      std::vector<Rational> row(vars, Rational(0));
      Rational lhs_base = -qi.rhs;
      for (int a = 0; a < m; ++a) lhs_base += qi.coef[a] * base[a];
      for (int j = 0; j < d; ++j) {
        Rational cj = 0;
        for (int a = 0; a < m; ++a) cj += qi.coef[a] * null_basis[a][j];
        row[j] = -cj;
        row[d + j] = cj;
      }
      if (qi.strict) row[2 * d] = 1;
      A.push_back(std::move(row));
      b.push_back(lhs_base);
    }
    {
      std::vector<Rational> row(vars, Rational(0));
      row[2 * d] = 1;
      A.push_back(std::move(row));
      b.push_back(1);
    }
    std::vector<Rational> c(vars, Rational(0));
    c[2 * d] = 1;
    LpResult lp = solve_lp_max(A, b, c);
    if (lp.status != LpStatus::optimal || !(lp.value > 0)) return std::nullopt;
    for (int a = 0; a < m; ++a) {
      sigma[a] = base[a];
      for (int j = 0; j < d; ++j)
        sigma[a] += null_basis[a][j] * (lp.x[j] - lp.x[d + j]);
    }
  }

  // Route the masses; doubles as the exact feasibility certificate.
  std::vector<Rational> supplies;
  std::vector<TransportEdge> edges;
  for (int t = 0; t < T; ++t) {
    supplies.push_back(inst.groups[t].mass);
    for (int a : cell.demand[t]) edges.push_back({t, a});
  }
  auto routed = route_transport(supplies, sigma, edges);
  if (!routed) return std::nullopt;

  FpSolution sol;
  sol.sigma = sigma;
  sol.group_flow.assign(T, std::vector<Rational>(m, Rational(0)));
  for (std::size_t k = 0; k < edges.size(); ++k)
    sol.group_flow[edges[k].row][edges[k].col] = (*routed)[k];

  // Independent verification against the definition: the pattern must be the
  // exact demand correspondence at sigma.
  sol.group_demand.resize(T);
  for (int t = 0; t < T; ++t) {
    sol.group_demand[t] = exact_demand(inst, t, sigma);
    if (sol.group_demand[t] != cell.demand[t]) return std::nullopt;
  }
  Rational total_check = 0;
  for (int a = 0; a < m; ++a) total_check += sigma[a];
  if (total_check != inst.total) return std::nullopt;
  return sol;
}

// Damped tatonnement in floating point; only used to pick which exact cells
// to try first. A constant step limit-cycles once demand ties appear (the
// uniform split jumps discontinuously), so after a warmup the step decays
// and the tail average is returned.
inline std::vector<double> float_iterate(const FpInstance& inst,
                                         int max_iters = 6000) {
  int m = inst.posts;
  double total = to_double(inst.total);
  std::vector<double> sigma(m, total / m);

  // double image of the curves, converted once
  struct DCurve {
    std::vector<double> knot, value;
  };
  std::vector<std::vector<DCurve>> curves(inst.groups.size());
  for (std::size_t t = 0; t < inst.groups.size(); ++t) {
    curves[t].resize(m);
    for (int a = 0; a < m; ++a) {
      for (const auto& k : inst.groups[t].curves[a].knot)
        curves[t][a].knot.push_back(to_double(k));
      for (const auto& v : inst.groups[t].curves[a].value)
        curves[t][a].value.push_back(to_double(v));
    }
  }

  auto eval = [&](int t, int a, double z) {
    const DCurve& c = curves[t][a];
    int K = static_cast<int>(c.knot.size());
    for (int k = 0; k + 1 < K; ++k) {
      double hi = c.knot[k + 1];
      if (z <= hi || k + 2 == K) {
        double lo = c.knot[k];
        double vlo = c.value[k], vhi = c.value[k + 1];
        if (hi == lo) return vlo;
        double f = (z - lo) / (hi - lo);
        return vlo + f * (vhi - vlo);
      }
    }
    return c.value.back();
  };

  std::vector<double> target(m), average(m, 0.0);
  int averaged = 0;
  const int warmup = 200;
  for (int it = 0; it < max_iters; ++it) {
    std::fill(target.begin(), target.end(), 0.0);
    for (std::size_t t = 0; t < inst.groups.size(); ++t) {
      double best = -1e300;
      for (int a = 0; a < m; ++a)
        best = std::max(best, eval(static_cast<int>(t), a, sigma[a]));
      double tol = 1e-9 * (1.0 + std::abs(best));
      std::vector<int> dem;
      for (int a = 0; a < m; ++a)
        if (eval(static_cast<int>(t), a, sigma[a]) >= best - tol)
          dem.push_back(a);
      double share = to_double(inst.groups[t].mass) / dem.size();
      for (int a : dem) target[a] += share;
    }
    double eta = it < warmup ? 0.25 : 8.0 / (16.0 + it - warmup);
    double gap = 0;
    for (int a = 0; a < m; ++a) {
      double next = (1.0 - eta) * sigma[a] + eta * target[a];
      gap = std::max(gap, std::abs(next - sigma[a]));
      sigma[a] = next;
    }
    if (it >= max_iters / 2) {
      for (int a = 0; a < m; ++a) average[a] += sigma[a];
      ++averaged;
    }
    if (gap < 1e-12 * (1.0 + total) && it >= warmup) return sigma;
  }
  for (int a = 0; a < m; ++a) average[a] /= averaged;
  return average;
}

struct FpOutcome {
  FpSolution solution;
  bool from_fallback = false;
};

// Full solver: float phase proposes cells, exact phase verifies; exhaustive
// cell enumeration as a safety net.
inline FpOutcome solve_fixed_point(const FpInstance& inst) {
  int m = inst.posts;
  int T = static_cast<int>(inst.groups.size());
  std::vector<double> approx = float_iterate(inst);

  // candidate grid segments per post (the containing one, plus neighbours
  // when the float iterate sits near a knot)
  std::vector<std::vector<int>> seg_candidates(m);
  double snap = 2e-2 * (1.0 + to_double(inst.total));
  for (int a = 0; a < m; ++a) {
    const auto& grid = inst.grid[a];
    int L = static_cast<int>(grid.size()) - 1;
    int inside = L - 1;
    for (int k = 0; k < L; ++k)
      if (approx[a] <= to_double(grid[k + 1]) + 1e-12) {
        inside = k;
        break;
      }
    seg_candidates[a].push_back(inside);
    if (inside > 0 && approx[a] - to_double(grid[inside]) < snap)
      seg_candidates[a].push_back(inside - 1);
    if (inside + 1 < L &&
        to_double(grid[inside + 1]) - approx[a] < snap)
      seg_candidates[a].push_back(inside + 1);
  }

  // demand closures at a ladder of tolerances
  std::vector<std::vector<std::vector<int>>> patterns;
  {
    std::vector<double> best(T, -1e300);
    std::vector<std::vector<double>> util(T, std::vector<double>(m));
    for (int t = 0; t < T; ++t) {
      for (int a = 0; a < m; ++a) {
        const auto& c = inst.groups[t].curves[a];
        // exact curves, float argument
        Rational za(0);
        double u;
        {
          int K = static_cast<int>(c.knot.size());
          u = to_double(c.value.back());
          for (int k = 0; k + 1 < K; ++k) {
            double hi = to_double(c.knot[k + 1]);
            if (approx[a] <= hi) {
              double lo = to_double(c.knot[k]);
              double vlo = to_double(c.value[k]);
              double vhi = to_double(c.value[k + 1]);
              u = (hi == lo) ? vlo
                             : vlo + (approx[a] - lo) / (hi - lo) * (vhi - vlo);
              break;
            }
          }
        }
        util[t][a] = u;
        best[t] = std::max(best[t], u);
      }
    }
    std::vector<std::vector<std::vector<int>>> per_group_sets(T);
    for (int t = 0; t < T; ++t) {
      for (double tol : {1e-9, 1e-6, 1e-4, 5e-2}) {
        double scaled = tol * (1.0 + std::abs(best[t]));
        std::vector<int> set;
        for (int a = 0; a < m; ++a)
          if (util[t][a] >= best[t] - scaled) set.push_back(a);
        if (per_group_sets[t].empty() || set != per_group_sets[t].back())
          per_group_sets[t].push_back(std::move(set));
      }
    }
    // product of the per-group closure chains, capped; tie detection may
    // trigger at different tolerance levels for different groups
    unsigned long long combos = 1;
    for (int t = 0; t < T && combos <= 2048; ++t)
      combos *= per_group_sets[t].size();
    if (combos <= 2048) {
      std::vector<std::size_t> pick(T, 0);
      while (true) {
        std::vector<std::vector<int>> pat(T);
        for (int t = 0; t < T; ++t) pat[t] = per_group_sets[t][pick[t]];
        if (std::find(patterns.begin(), patterns.end(), pat) == patterns.end())
          patterns.push_back(std::move(pat));
        int t = T - 1;
        while (t >= 0 && pick[t] + 1 == per_group_sets[t].size())
          pick[t--] = 0;
        if (t < 0) break;
        ++pick[t];
      }
    } else {
      for (std::size_t lvl = 0;; ++lvl) {
        bool any = false;
        std::vector<std::vector<int>> pat(T);
        for (int t = 0; t < T; ++t) {
          std::size_t use = std::min(lvl, per_group_sets[t].size() - 1);
          if (use == lvl) any = true;
          pat[t] = per_group_sets[t][use];
        }
        if (!any) break;
        if (std::find(patterns.begin(), patterns.end(), pat) == patterns.end())
          patterns.push_back(std::move(pat));
      }
    }
  }

  std::vector<FpCell> tried;
  auto try_cell = [&](const FpCell& cell) -> std::optional<FpSolution> {
    tried.push_back(cell);
    return solve_cell(inst, cell);
  };

  // guided phase: every combination of candidate segments with each closure
  std::vector<int> seg(m, 0);
  for (const auto& pat : patterns) {
    std::vector<int> pick(m, 0);
    while (true) {
      FpCell cell;
      cell.segment.resize(m);
      for (int a = 0; a < m; ++a) cell.segment[a] = seg_candidates[a][pick[a]];
      cell.demand = pat;
      if (auto sol = try_cell(cell)) return {*sol, false};
      int a = m - 1;
      while (a >= 0 &&
             pick[a] + 1 == static_cast<int>(seg_candidates[a].size()))
        pick[a--] = 0;
      if (a < 0) break;
      ++pick[a];
    }
  }

  // fallback: exhaustive cells with interval pruning
  const unsigned long long pattern_cap = 200000;
  std::vector<int> segment(m, 0);
  auto box_sum_feasible = [&]() {
    Rational lo = 0, hi = 0;
    for (int a = 0; a < m; ++a) {
      lo += inst.grid[a][segment[a]];
      hi += inst.grid[a][segment[a] + 1];
    }
    return lo <= inst.total && inst.total <= hi;
  };
  auto box_rec = [&](auto&& self, int a) -> std::optional<FpSolution> {
    if (a == m) {
      if (!box_sum_feasible()) return std::nullopt;
      // possible argmax sets per group from utility intervals on the box
      std::vector<std::vector<int>> possible(T);
      for (int t = 0; t < T; ++t) {
        std::vector<Rational> lo(m), hi(m);
        Rational best_lo;
        for (int x = 0; x < m; ++x) {
          const auto& grid = inst.grid[x];
          const auto& curve = inst.groups[t].curves[x];
          Rational v1 = curve.eval(grid[segment[x]]);
          Rational v2 = curve.eval(grid[segment[x] + 1]);
          lo[x] = rational_min(v1, v2);
          hi[x] = rational_max(v1, v2);
          if (x == 0 || lo[x] > best_lo) best_lo = lo[x];
        }
        for (int x = 0; x < m; ++x)
          if (hi[x] >= best_lo) possible[t].push_back(x);
      }
      unsigned long long combos = 1;
      for (int t = 0; t < T; ++t) {
        combos *= (1ULL << possible[t].size()) - 1;
        if (combos > pattern_cap) return std::nullopt;  // skip huge boxes
      }
      // enumerate nonempty subsets of the possible sets
      std::vector<std::vector<int>> chosen(T);
      auto pat_rec = [&](auto&& pself, int t) -> std::optional<FpSolution> {
        if (t == T) {
          FpCell cell{segment, chosen};
          return try_cell(cell);
        }
        int P = static_cast<int>(possible[t].size());
        for (unsigned mask = 1; mask < (1u << P); ++mask) {
          chosen[t].clear();
          for (int j = 0; j < P; ++j)
            if (mask >> j & 1) chosen[t].push_back(possible[t][j]);
          if (auto sol = pself(pself, t + 1)) return sol;
        }
        return std::nullopt;
      };
      return pat_rec(pat_rec, 0);
    }
    int L = static_cast<int>(inst.grid[a].size()) - 1;
    for (int k = 0; k < L; ++k) {
      segment[a] = k;
      if (auto sol = self(self, a + 1)) return sol;
    }
    return std::nullopt;
  };
  if (auto sol = box_rec(box_rec, 0)) return {*sol, true};

  std::string diag = "fixed point not found; float iterate =";
  for (int a = 0; a < m; ++a) diag += " " + std::to_string(approx[a]);
  diag += "; cells tried = " + std::to_string(tried.size());
  throw SolverError(diag);
}

// Exhaustively enumerates every competitive profile (used by the uniqueness
// reporting inside the library; the test-side oracle is separate code).
inline std::vector<FpSolution> enumerate_fixed_points(const FpInstance& inst) {
  int m = inst.posts;
  int T = static_cast<int>(inst.groups.size());
  std::vector<FpSolution> found;
  std::set<std::vector<Rational>> seen;

  std::vector<int> segment(m, 0);
  auto box_rec = [&](auto&& self, int a) -> void {
    if (a == m) {
      Rational lo_sum = 0, hi_sum = 0;
      for (int x = 0; x < m; ++x) {
        lo_sum += inst.grid[x][segment[x]];
        hi_sum += inst.grid[x][segment[x] + 1];
      }
      if (lo_sum > inst.total || hi_sum < inst.total) return;
      std::vector<std::vector<int>> possible(T);
      for (int t = 0; t < T; ++t) {
        std::vector<Rational> lo(m), hi(m);
        Rational best_lo;
        for (int x = 0; x < m; ++x) {
          const auto& grid = inst.grid[x];
          const auto& curve = inst.groups[t].curves[x];
          Rational v1 = curve.eval(grid[segment[x]]);
          Rational v2 = curve.eval(grid[segment[x] + 1]);
          lo[x] = rational_min(v1, v2);
          hi[x] = rational_max(v1, v2);
          if (x == 0 || lo[x] > best_lo) best_lo = lo[x];
        }
        for (int x = 0; x < m; ++x)
          if (hi[x] >= best_lo) possible[t].push_back(x);
      }
      std::vector<std::vector<int>> chosen(T);
      auto pat_rec = [&](auto&& pself, int t) -> void {
        if (t == T) {
          FpCell cell{segment, chosen};
          if (auto sol = solve_cell(inst, cell))
            if (seen.insert(sol->sigma).second) found.push_back(*sol);
          return;
        }
        int P = static_cast<int>(possible[t].size());
        for (unsigned mask = 1; mask < (1u << P); ++mask) {
          chosen[t].clear();
          for (int j = 0; j < P; ++j)
            if (mask >> j & 1) chosen[t].push_back(possible[t][j]);
          pself(pself, t + 1);
        }
      };
      pat_rec(pat_rec, 0);
      return;
    }
    int L = static_cast<int>(inst.grid[a].size()) - 1;
    for (int k = 0; k < L; ++k) {
      segment[a] = k;
      self(self, a + 1);
    }
  };
  box_rec(box_rec, 0);
  return found;
}

}  // namespace congestfair::detail
