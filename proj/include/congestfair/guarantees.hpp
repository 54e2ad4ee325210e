#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/problem.hpp"

namespace congestfair {

// Per-agent acceptance caps: the agent accepts (a, z) iff z <= caps[a].
// Anonymous caps are integers summing to n; weighted caps are 0 or in
// [w_i, W] and sum to W + (support-1) * w_i.
struct Prefix {
  std::vector<Rational> caps;

  int support_size() const {
    int k = 0;
    for (const auto& c : caps)
      if (c > 0) ++k;
    return k;
  }
};

using PrefixProfile = std::vector<Prefix>;

inline void validate_prefix(const Problem& problem, int agent,
                            const Prefix& prefix) {
  if (static_cast<int>(prefix.caps.size()) != problem.post_count())
    throw ValidationError("cap vector has wrong length");
  Rational sum = 0;
  for (const Rational& c : prefix.caps) {
    if (c < 0) throw ValidationError("negative cap");
    sum += c;
  }
  if (problem.anonymous()) {
    for (const Rational& c : prefix.caps)
      if (!is_integral(c)) throw ValidationError("anonymous cap not integer");
    if (sum != problem.agent_count())
      throw ValidationError("caps of " + problem.agent_label(agent) +
                            " must sum to the number of agents");
  } else {
    const Rational& w = problem.weight(agent);
    const Rational& W = problem.total_weight();
    for (const Rational& c : prefix.caps)
      if (c != 0 && (c < w || c > W))
        throw ValidationError("weighted cap outside {0} union [w_i, W]");
    if (sum != W + Rational(prefix.support_size() - 1) * w)
      throw ValidationError("weighted caps of " + problem.agent_label(agent) +
                            " violate the size constraint");
  }
}

namespace detail {

// Weak-order levels of an anonymous agent, from the ranking when present,
// otherwise induced by the utility table.
inline std::vector<int> ordinal_levels(const Problem& problem, int agent) {
  const Preference& p = problem.preference(agent);
  int m = problem.post_count(), n = problem.agent_count();
  if (p.has_ranking()) return p.ranking().level;
  const UtilityTable& t = p.table();
  std::vector<int> idx(static_cast<std::size_t>(m) * n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
    return t.value[x] > t.value[y];
  });
  std::vector<int> level(idx.size());
  int cur = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0 && t.value[idx[k]] != t.value[idx[k - 1]]) ++cur;
    level[idx[k]] = cur;
  }
  return level;
}

struct PrefixShape {
  std::vector<int> base;  // caps forced into every n-prefix
  std::vector<int> tied;  // posts whose next slot sits at the threshold level
  int choose = 0;         // how many tied posts each prefix picks up
};

// Top-n structure of a weak order: everything strictly above the threshold
// level is in every prefix; the threshold level holds at most one allocation
// per post (strict monotonicity in s), and any `choose`-subset completes a
// prefix.
inline PrefixShape prefix_shape(const Problem& problem, int agent) {
  int m = problem.post_count(), n = problem.agent_count();
  std::vector<int> level = ordinal_levels(problem, agent);
  std::vector<int> sorted(level);
  std::nth_element(sorted.begin(), sorted.begin() + (n - 1), sorted.end());
  int threshold = sorted[n - 1];

  PrefixShape shape;
  shape.base.assign(m, 0);
  int base_total = 0;
  for (int a = 0; a < m; ++a) {
    int c = 0;
    while (c < n && level[a * n + c] < threshold) ++c;
    shape.base[a] = c;
    base_total += c;
    if (c < n && level[a * n + c] == threshold) shape.tied.push_back(a);
  }
  shape.choose = n - base_total;
  return shape;
}

}  // namespace detail

struct PrefixFamily {
  std::vector<Prefix> prefixes;
  bool truncated = false;           // true when only the canonical one is kept
  unsigned long long count = 0;     // total family size (saturating)
};

// All n-prefixes of an anonymous agent, up to max_enumerate of them; beyond
// that only the canonical prefix (ties resolved by post order) is returned
// and `truncated` is set.
inline PrefixFamily anonymous_prefixes(const Problem& problem, int agent,
                                       unsigned max_enumerate = 64) {
  if (!problem.anonymous())
    throw ValidationError("anonymous_prefixes needs an anonymous problem");
  auto shape = detail::prefix_shape(problem, agent);
  int g = static_cast<int>(shape.tied.size());
  int k = shape.choose;

  PrefixFamily family;
  unsigned long long count = 1;
  for (int j = 0; j < k; ++j) {
    count = count * static_cast<unsigned long long>(g - j) / (j + 1);
    if (count > 1'000'000'000ULL) {
      count = std::numeric_limits<unsigned long long>::max();
      break;
    }
  }
  family.count = count;

  auto make = [&](const std::vector<int>& picked) {
    Prefix p;
    p.caps.assign(shape.base.begin(), shape.base.end());
    for (int a : picked) p.caps[a] += 1;
    return p;
  };

  if (count > max_enumerate) {
    family.truncated = true;
    std::vector<int> canonical(shape.tied.begin(), shape.tied.begin() + k);
    family.prefixes.push_back(make(canonical));
    return family;
  }

  std::vector<int> pick;
  auto rec = [&](auto&& self, int from) -> void {
    if (static_cast<int>(pick.size()) == k) {
      family.prefixes.push_back(make(pick));
      return;
    }
    int need = k - static_cast<int>(pick.size());
    for (int j = from; j + need <= g; ++j) {
      pick.push_back(shape.tied[j]);
      self(self, j + 1);
      pick.pop_back();
    }
  };
  rec(rec, 0);
  return family;
}

// Largest cap any n-prefix of this agent puts on `post`.
inline int max_prefix_cap(const Problem& problem, int agent, int post) {
  auto shape = detail::prefix_shape(problem, agent);
  int cap = shape.base[post];
  if (shape.choose > 0 &&
      std::find(shape.tied.begin(), shape.tied.end(), post) !=
          shape.tied.end())
    ++cap;
  return cap;
}

// The unique top 1/m quantile of a weighted agent, computed exactly: find
// the smallest utility threshold whose upper level set has Lebesgue measure
// W - w_i, then read off the per-post acceptance caps.
inline Prefix weighted_prefix(const Problem& problem, int agent) {
  if (problem.anonymous())
    throw ValidationError("weighted_prefix needs a weighted problem");
  const auto& u = problem.preference(agent).piecewise_utility();
  const Rational& w = problem.weight(agent);
  const Rational& W = problem.total_weight();
  Rational target = W - w;
  int m = problem.post_count();

  // Largest z in [w, W] with u_a(z) >= theta; nullopt when even z = w fails.
  auto cut = [&](int a, const Rational& theta) -> std::optional<Rational> {
    const auto& pts = u.per_post[a];
    if (pts.front().value < theta) return std::nullopt;
    if (pts.back().value >= theta) return W;
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
      if (pts[j + 1].value < theta) {
        // strictly decreasing segment crossing theta
        Rational t = (pts[j].value - theta) / (pts[j].value - pts[j + 1].value);
        return pts[j].load + t * (pts[j + 1].load - pts[j].load);
      }
    }
    return pts.back().load;
  };

  auto measure = [&](const Rational& theta) {
    Rational total = 0;
    for (int a = 0; a < m; ++a)
      if (auto z = cut(a, theta)) total += *z - w;
    return total;
  };

  std::set<Rational> knot_values;
  for (int a = 0; a < m; ++a)
    for (const auto& pt : u.per_post[a]) knot_values.insert(pt.value);
  std::vector<Rational> thetas(knot_values.begin(), knot_values.end());

  // T(theta) is continuous, weakly decreasing, affine between knot values,
  // with T(min knot) = m (W - w_i) and T -> 0 above the best value. The
  // smallest root of T(theta) = W - w_i gives the canonical quantile.
  Rational theta_star;
  bool found = false;
  Rational prev_theta = thetas.front();
  Rational prev_measure = measure(prev_theta);
  if (prev_measure == target) {
    theta_star = prev_theta;
    found = true;
  }
  if (!found && prev_measure < target)
    throw SolverError("quantile measure below target at the lowest knot");
  for (std::size_t j = 1; j < thetas.size() && !found; ++j) {
    Rational cur_theta = thetas[j];
    Rational cur_measure = measure(cur_theta);
    if (cur_measure <= target) {
      // crosses inside (prev, cur]; the segment is affine
      Rational slope =
          (cur_measure - prev_measure) / (cur_theta - prev_theta);
      theta_star = prev_theta + (target - prev_measure) / slope;
      found = true;
    } else {
      prev_theta = cur_theta;
      prev_measure = cur_measure;
    }
  }
  if (!found) throw SolverError("quantile threshold not found");

  Prefix prefix;
  prefix.caps.assign(m, Rational(0));
  for (int a = 0; a < m; ++a)
    if (auto z = cut(a, theta_star)) prefix.caps[a] = *z;
  validate_prefix(problem, agent, prefix);
  return prefix;
}

// Canonical caps for one agent under either model.
inline Prefix canonical_prefix(const Problem& problem, int agent) {
  if (problem.anonymous())
    return anonymous_prefixes(problem, agent, 1).prefixes.front();
  return weighted_prefix(problem, agent);
}

// Declared caps when the problem carries them, canonical ones otherwise.
inline PrefixProfile effective_prefix_profile(const Problem& problem) {
  PrefixProfile profile;
  profile.reserve(problem.agent_count());
  for (int i = 0; i < problem.agent_count(); ++i) {
    if (const auto& declared = problem.declared_caps(i)) {
      Prefix p{*declared};
      validate_prefix(problem, i, p);
      profile.push_back(std::move(p));
    } else {
      profile.push_back(canonical_prefix(problem, i));
    }
  }
  return profile;
}

// Top-fairness: every occupied post's congestion is within every occupant's
// cap.
inline bool is_top_fair(const Problem& problem, const PrefixProfile& profile,
                        const Assignment& asg) {
  auto load = congestion_profile(problem, asg);
  for (int i = 0; i < problem.agent_count(); ++i) {
    int a = asg.post_of[i];
    if (load[a] > profile[i].caps[a]) return false;
  }
  return true;
}

// Maximal number of agents that can sit fairly at `post`: the largest k such
// that k agents accept congestion k there. Anonymous model only.
inline int max_fair_load(const Problem& problem, const PrefixProfile& profile,
                         int post) {
  if (!problem.anonymous())
    throw ValidationError("max_fair_load needs an anonymous problem");
  std::vector<Rational> caps;
  caps.reserve(problem.agent_count());
  for (int i = 0; i < problem.agent_count(); ++i)
    caps.push_back(profile[i].caps[post]);
  std::sort(caps.begin(), caps.end(), std::greater<>());
  int best = 0;
  for (int k = 1; k <= static_cast<int>(caps.size()); ++k)
    if (caps[k - 1] >= k) best = k;
  return best;
}

// The congestion profile of a top-fair assignment is unique exactly when the
// per-post maxima add up to n.
inline bool has_unique_fair_congestion(const Problem& problem,
                                       const PrefixProfile& profile) {
  int total = 0;
  for (int a = 0; a < problem.post_count(); ++a)
    total += max_fair_load(problem, profile, a);
  return total == problem.agent_count();
}

namespace detail {

inline Assignment greedy_anonymous(const Problem& problem,
                                   const PrefixProfile& profile) {
  int m = problem.post_count(), n = problem.agent_count();
  Assignment asg;
  asg.post_of.assign(n, -1);
  std::vector<int> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);

  for (int a = 0; a < m && !remaining.empty(); ++a) {
    // caps at this post, largest first; ties by agent index
    std::vector<int> order(remaining);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
      return profile[i].caps[a] > profile[j].caps[a];
    });
    int fit = 0;
    for (int k = 1; k <= static_cast<int>(order.size()); ++k)
      if (profile[order[k - 1]].caps[a] >= k) fit = k;
    for (int k = 0; k < fit; ++k) asg.post_of[order[k]] = a;
    std::vector<int> rest;
    for (int i : remaining)
      if (asg.post_of[i] == -1) rest.push_back(i);
    remaining.swap(rest);
  }
  if (!remaining.empty())
    throw SolverError(
        "greedy left agents unassigned; the cap profile is invalid");
  return asg;
}

inline Assignment greedy_weighted(const Problem& problem,
                                  const PrefixProfile& profile) {
  int m = problem.post_count(), n = problem.agent_count();
  Assignment asg;
  asg.post_of.assign(n, -1);
  std::vector<int> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);

  for (int a = 0; a < m && !remaining.empty(); ++a) {
    std::vector<int> order(remaining);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
      return profile[i].caps[a] > profile[j].caps[a];
    });
    if (profile[order.front()].caps[a] == 0) continue;

    // Grow the occupant set: repeatedly admit the highest-cap outsider that
    // accepts the current total weight plus their own.
    std::vector<bool> in(n, false);
    in[order.front()] = true;
    Rational total = problem.weight(order.front());
    bool grew = true;
    while (grew) {
      grew = false;
      for (int i : order) {
        if (in[i]) continue;
        if (profile[i].caps[a] >= total + problem.weight(i)) {
          in[i] = true;
          total += problem.weight(i);
          grew = true;
          break;
        }
      }
    }
    for (int i : order)
      if (in[i]) asg.post_of[i] = a;
    std::vector<int> rest;
    for (int i : remaining)
      if (asg.post_of[i] == -1) rest.push_back(i);
    remaining.swap(rest);
  }
  if (!remaining.empty())
    throw SolverError(
        "greedy left agents unassigned; the cap profile is invalid");
  return asg;
}

}  // namespace detail

// Constructs one top-fair assignment for a valid cap profile (always exists).
inline Assignment greedy_top_fair(const Problem& problem,
                                  const PrefixProfile& profile) {
  Assignment asg = problem.anonymous()
                       ? detail::greedy_anonymous(problem, profile)
                       : detail::greedy_weighted(problem, profile);
  if (!is_top_fair(problem, profile, asg))
    throw SolverError("greedy produced an unfair assignment");
  return asg;
}

struct TopFairSet {
  std::vector<Assignment> assignments;               // lexicographic order
  std::set<std::vector<Rational>> congestion_profiles;
};

// Exhaustive, order-stable enumeration of all top-fair assignments, by
// depth-first search over agents with a residual-capacity prune.
inline TopFairSet enumerate_top_fair(const Problem& problem,
                                     const PrefixProfile& profile,
                                     unsigned long long limit = 1'000'000) {
  int m = problem.post_count(), n = problem.agent_count();
  TopFairSet out;
  Assignment asg;
  asg.post_of.assign(n, -1);
  std::vector<Rational> load(m, Rational(0));
  // tightest cap among current occupants, per post
  std::vector<Rational> cap_min(m, Rational(n) * problem.total_weight() + 1);

  // Anonymous prune: total slack still available must cover the agents left.
  auto anonymous_room = [&](int next) {
    int left = n - next;
    int room = 0;
    for (int a = 0; a < m; ++a) {
      std::vector<Rational> caps;
      for (int j = next; j < n; ++j)
        if (profile[j].caps[a] > 0) caps.push_back(profile[j].caps[a]);
      std::sort(caps.begin(), caps.end(), std::greater<>());
      int best = 0;
      for (int k = 1; k <= static_cast<int>(caps.size()); ++k) {
        Rational target = load[a] + k;
        if (caps[k - 1] >= target && cap_min[a] >= target) best = k;
      }
      room += best;
    }
    return room >= left;
  };

  auto rec = [&](auto&& self, int i) -> void {
    if (i == n) {
      if (out.assignments.size() >= limit)
        throw LimitError("top-fair enumeration limit exceeded",
                         out.assignments.size());
      out.assignments.push_back(asg);
      out.congestion_profiles.insert(load);
      return;
    }
    if (problem.anonymous() && !anonymous_room(i)) return;
    for (int a = 0; a < m; ++a) {
      Rational next_load = load[a] + problem.weight(i);
      if (next_load > profile[i].caps[a] || next_load > cap_min[a]) continue;
      Rational saved_min = cap_min[a];
      load[a] = next_load;
      cap_min[a] = rational_min(cap_min[a], profile[i].caps[a]);
      asg.post_of[i] = a;
      self(self, i + 1);
      asg.post_of[i] = -1;
      load[a] = next_load - problem.weight(i);
      cap_min[a] = saved_min;
    }
  };
  rec(rec, 0);
  return out;
}

// Adversarial weighted instance showing the top 1/m guarantee is tight: a
// target agent plus one single-minded agent per accepted post, with weights
// chosen so every top-fair assignment pins the target to `post` at
// congestion caps[post] - (support-1) * eps.
struct MaximalityWitness {
  Problem problem;
  int target_agent;  // index of the pinned agent
  int target_post;
  Rational pinned_congestion;
};

inline MaximalityWitness maximality_witness(
    const std::vector<std::string>& post_labels, const Rational& total_weight,
    const Rational& target_weight, const std::vector<Rational>& target_caps,
    int post, const Rational& eps) {
  int m = static_cast<int>(post_labels.size());
  if (static_cast<int>(target_caps.size()) != m)
    throw ValidationError("cap vector has wrong length");
  if (!(target_caps[post] > target_weight))
    throw ValidationError("target cap at the pinned post must exceed w_i*");
  if (eps <= 0) throw ValidationError("eps must be positive");
  int support = 0;
  Rational cap_sum = 0;
  for (const Rational& c : target_caps) {
    if (c != 0 && (c < target_weight || c > total_weight))
      throw ValidationError("target cap outside {0} union [w_i, W]");
    if (c > 0) ++support;
    cap_sum += c;
  }
  if (cap_sum != total_weight + Rational(support - 1) * target_weight)
    throw ValidationError("target caps violate the size constraint");
  Rational pinned =
      target_caps[post] - Rational(support - 1) * eps;
  Rational anchor_weight = pinned - target_weight;
  if (anchor_weight <= 0)
    throw ValidationError("eps too large: the pinned post's agent vanishes");

  std::vector<AgentSpec> agents;
  {
    AgentSpec star;
    star.label = "istar";
    star.weight = target_weight;
    star.declared_caps = target_caps;
    star.preference =
        Preference::piecewise(slack_piecewise(target_caps, target_weight,
                                              total_weight));
    agents.push_back(std::move(star));
  }
  for (int b = 0; b < m; ++b) {
    if (target_caps[b] <= 0) continue;
    AgentSpec a;
    a.label = "guard_" + post_labels[b];
    a.weight = (b == post) ? anchor_weight
                           : target_caps[b] - target_weight + eps;
    std::vector<Rational> caps(m, Rational(0));
    caps[b] = total_weight;
    a.declared_caps = caps;
    a.preference =
        Preference::piecewise(slack_piecewise(caps, a.weight, total_weight));
    agents.push_back(std::move(a));
  }

  Rational check = target_weight;
  for (std::size_t j = 1; j < agents.size(); ++j) check += agents[j].weight;
  if (check != total_weight)
    throw ValidationError("witness weights do not add up to W");

  MaximalityWitness w{
      Problem(CongestionModel::weighted, post_labels, std::move(agents)), 0,
      post, pinned};
  return w;
}

}  // namespace congestfair
