#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/preferences.hpp"
#include "congestfair/rational.hpp"

namespace congestfair {

enum class CongestionModel { anonymous, weighted };

// Slack utility induced by a cap vector: u(x, z) = cap_x - z. The canonical
// cardinal representation of an agent described only by their caps.
inline UtilityTable slack_table(const std::vector<Rational>& caps, int slots) {
  UtilityTable t;
  t.posts = static_cast<int>(caps.size());
  t.slots = slots;
  t.value.reserve(static_cast<std::size_t>(t.posts) * slots);
  for (int a = 0; a < t.posts; ++a)
    for (int s = 1; s <= slots; ++s) t.value.push_back(caps[a] - s);
  return t;
}

inline PiecewiseUtility slack_piecewise(const std::vector<Rational>& caps,
                                        const Rational& weight,
                                        const Rational& total_weight) {
  PiecewiseUtility u;
  u.per_post.reserve(caps.size());
  for (const Rational& cap : caps) {
    if (weight == total_weight)
      u.per_post.push_back({{weight, cap - weight}});
    else
      u.per_post.push_back(
          {{weight, cap - weight}, {total_weight, cap - total_weight}});
  }
  return u;
}

struct AgentSpec {
  std::string label;
  Preference preference;
  Rational weight = 1;                          // ignored when anonymous
  std::optional<std::vector<Rational>> declared_caps;  // prefix override
};

// An immutable congestion problem: posts, agents with preferences, and (in
// the weighted model) strictly positive weights. Posts and agents are
// addressed by dense indices in declaration order; labels are kept for I/O.
class Problem {
 public:
  Problem(CongestionModel model, std::vector<std::string> post_labels,
          std::vector<AgentSpec> agents)
      : model_(model), post_labels_(std::move(post_labels)) {
    if (post_labels_.empty()) throw ValidationError("no posts");
    if (agents.empty()) throw ValidationError("no agents");
    {
      std::set<std::string> seen(post_labels_.begin(), post_labels_.end());
      if (seen.size() != post_labels_.size())
        throw ValidationError("duplicate post label");
    }
    for (auto& a : agents) {
      agent_labels_.push_back(std::move(a.label));
      weights_.push_back(model_ == CongestionModel::anonymous ? Rational(1)
                                                              : a.weight);
      preferences_.push_back(std::move(a.preference));
      declared_caps_.push_back(std::move(a.declared_caps));
    }
    {
      std::set<std::string> seen(agent_labels_.begin(), agent_labels_.end());
      if (seen.size() != agent_labels_.size())
        throw ValidationError("duplicate agent label");
    }
    total_weight_ = 0;
    for (const Rational& w : weights_) {
      if (w <= 0) throw ValidationError("agent weight must be positive");
      total_weight_ += w;
    }
    validate_preferences();
  }

  CongestionModel model() const { return model_; }
  bool anonymous() const { return model_ == CongestionModel::anonymous; }
  int post_count() const { return static_cast<int>(post_labels_.size()); }
  int agent_count() const { return static_cast<int>(agent_labels_.size()); }
  const std::string& post_label(int a) const { return post_labels_[a]; }
  const std::string& agent_label(int i) const { return agent_labels_[i]; }
  const std::vector<std::string>& post_labels() const { return post_labels_; }
  const std::vector<std::string>& agent_labels() const {
    return agent_labels_;
  }
  const Rational& weight(int i) const { return weights_[i]; }
  const Rational& total_weight() const { return total_weight_; }
  const Preference& preference(int i) const { return preferences_[i]; }
  const std::optional<std::vector<Rational>>& declared_caps(int i) const {
    return declared_caps_[i];
  }

  int post_index(const std::string& label) const {
    for (int a = 0; a < post_count(); ++a)
      if (post_labels_[a] == label) return a;
    return -1;
  }
  int agent_index(const std::string& label) const {
    for (int i = 0; i < agent_count(); ++i)
      if (agent_labels_[i] == label) return i;
    return -1;
  }

  // Exact cardinal utility of agent i for (post, congestion). Anonymous
  // congestion interpolates the table; weighted evaluates the piecewise form.
  Rational utility(int i, int post, const Rational& congestion) const {
    const Preference& p = preferences_[i];
    if (p.is_piecewise())
      return eval_piecewise_utility(p.piecewise_utility(), post, congestion);
    if (!p.has_table())
      throw DomainError("agent " + agent_labels_[i] +
                        " has no cardinal utility");
    return eval_table_utility(p.table(), post, congestion);
  }

  bool has_cardinal(int i) const { return preferences_[i].has_cardinal(); }

  // Preference comparison of two allocations, ordinal when available.
  Order compare(int i, int post1, const Rational& load1, int post2,
                const Rational& load2) const {
    const Preference& p = preferences_[i];
    if (p.has_ranking()) {
      if (!is_integral(load1) || !is_integral(load2))
        throw DomainError("ordinal ranking needs integer congestion");
      int l1 = p.ranking().at(post1, to_int(load1));
      int l2 = p.ranking().at(post2, to_int(load2));
      if (l1 < l2) return Order::better;
      if (l1 > l2) return Order::worse;
      return Order::equal;
    }
    Rational u1 = utility(i, post1, load1);
    Rational u2 = utility(i, post2, load2);
    if (u1 > u2) return Order::better;
    if (u1 < u2) return Order::worse;
    return Order::equal;
  }

 private:
  void validate_preferences() {
    int m = post_count();
    int n = agent_count();
    for (int i = 0; i < n; ++i) {
      const Preference& p = preferences_[i];
      if (anonymous()) {
        if (p.is_piecewise())
          throw ValidationError("piecewise utility in an anonymous problem");
        if (!p.has_ranking() && !p.has_table())
          throw ValidationError("agent " + agent_labels_[i] +
                                " has no preference");
        if (p.has_ranking() &&
            (p.ranking().posts != m || p.ranking().slots != n))
          throw ValidationError("ranking shape mismatch for " +
                                agent_labels_[i]);
        if (p.has_table() && (p.table().posts != m || p.table().slots != n))
          throw ValidationError("utility table shape mismatch for " +
                                agent_labels_[i]);
      } else {
        if (!p.is_piecewise())
          throw ValidationError(
              "weighted agents need a piecewise cardinal utility");
        const auto& u = p.piecewise_utility();
        if (static_cast<int>(u.per_post.size()) != m)
          throw ValidationError("piecewise utility shape mismatch for " +
                                agent_labels_[i]);
        for (const auto& pts : u.per_post) {
          if (pts.empty())
            throw ValidationError("piecewise utility needs breakpoints");
          if (pts.size() < 2 && weights_[i] != total_weight_)
            throw ValidationError("piecewise utility needs two breakpoints");
          if (pts.front().load != weights_[i] ||
              pts.back().load != total_weight_)
            throw ValidationError("piecewise utility of " + agent_labels_[i] +
                                  " must cover [w_i, W]");
          for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            if (!(pts[k].load < pts[k + 1].load))
              throw ValidationError("piecewise breakpoints not increasing");
            if (!(pts[k].value > pts[k + 1].value))
              throw ValidationError(
                  "piecewise utility not strictly decreasing");
          }
        }
      }
    }
  }

  CongestionModel model_;
  std::vector<std::string> post_labels_;
  std::vector<std::string> agent_labels_;
  std::vector<Rational> weights_;
  std::vector<Preference> preferences_;
  std::vector<std::optional<std::vector<Rational>>> declared_caps_;
  Rational total_weight_;
};

// A deterministic assignment: every agent is placed at exactly one post.
struct Assignment {
  std::vector<int> post_of;

  bool operator==(const Assignment& o) const = default;
  bool operator<(const Assignment& o) const { return post_of < o.post_of; }
};

// Congestion profile of an assignment: occupant count (anonymous) or total
// occupant weight (weighted) per post.
inline std::vector<Rational> congestion_profile(const Problem& problem,
                                                const Assignment& asg) {
  std::vector<Rational> load(problem.post_count(), Rational(0));
  for (int i = 0; i < problem.agent_count(); ++i)
    load[asg.post_of[i]] += problem.weight(i);
  return load;
}

inline std::vector<int> occupancy_counts(const Problem& problem,
                                         const Assignment& asg) {
  std::vector<int> cnt(problem.post_count(), 0);
  for (int i = 0; i < problem.agent_count(); ++i) ++cnt[asg.post_of[i]];
  return cnt;
}

// Agent i's exact utility under an assignment.
inline Rational assignment_utility(const Problem& problem,
                                   const Assignment& asg,
                                   const std::vector<Rational>& load, int i) {
  return problem.utility(i, asg.post_of[i], load[asg.post_of[i]]);
}

// Expected per-post load of a random assignment; sums to n (anonymous) or W.
struct FractionalCongestion {
  std::vector<Rational> load;
};

// Agent-by-post probability matrix with unit row sums.
struct SemiStochasticMatrix {
  int agents = 0;
  int posts = 0;
  std::vector<Rational> p;  // row-major

  Rational& at(int i, int a) { return p[i * posts + a]; }
  const Rational& at(int i, int a) const { return p[i * posts + a]; }

  static SemiStochasticMatrix zero(int agents, int posts) {
    SemiStochasticMatrix m;
    m.agents = agents;
    m.posts = posts;
    m.p.assign(static_cast<std::size_t>(agents) * posts, Rational(0));
    return m;
  }
};

struct LotteryEntry {
  Assignment assignment;
  Rational probability;
};

// A finite mixture of deterministic assignments.
struct Lottery {
  std::vector<LotteryEntry> entries;

  Rational total_probability() const {
    Rational s = 0;
    for (const auto& e : entries) s += e.probability;
    return s;
  }
};

inline std::vector<Rational> expected_congestion(const Problem& problem,
                                                 const Lottery& lottery) {
  std::vector<Rational> ex(problem.post_count(), Rational(0));
  for (const auto& e : lottery.entries) {
    auto load = congestion_profile(problem, e.assignment);
    for (int a = 0; a < problem.post_count(); ++a)
      ex[a] += e.probability * load[a];
  }
  return ex;
}

inline Rational expected_utility(const Problem& problem,
                                 const Lottery& lottery, int agent) {
  Rational ex = 0;
  for (const auto& e : lottery.entries) {
    auto load = congestion_profile(problem, e.assignment);
    ex += e.probability * assignment_utility(problem, e.assignment, load, agent);
  }
  return ex;
}

}  // namespace congestfair
