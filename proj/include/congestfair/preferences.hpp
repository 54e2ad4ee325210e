#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/rational.hpp"

namespace congestfair {

enum class Order { better, equal, worse };

inline Order reverse(Order o) {
  if (o == Order::better) return Order::worse;
  if (o == Order::worse) return Order::better;
  return Order::equal;
}

// Weak order over the m*n allocations (post, s), s in 1..n, stored as rank
// levels: lower level = preferred, equal level = indifferent. Strictly
// increasing in s at a fixed post (more congestion is strictly worse).
struct OrdinalRanking {
  int posts = 0;
  int slots = 0;                  // n: congestion runs over 1..slots
  std::vector<int> level;         // size posts*slots, index post*slots + (s-1)

  int at(int post, int s) const { return level[post * slots + (s - 1)]; }
};

// Cardinal utility over A x [n], exact rational values, strictly decreasing
// in s at each post.
struct UtilityTable {
  int posts = 0;
  int slots = 0;
  std::vector<Rational> value;    // size posts*slots

  const Rational& at(int post, int s) const {
    return value[post * slots + (s - 1)];
  }
};

// One knot of a piecewise-linear weighted utility.
struct PiecewisePoint {
  Rational load;
  Rational value;
};

// Weighted cardinal utility: per post a piecewise-linear, strictly decreasing
// function of congestion on [w_i, W], given by its breakpoints.
struct PiecewiseUtility {
  std::vector<std::vector<PiecewisePoint>> per_post;
};

namespace detail {

inline void check_ordinal(const OrdinalRanking& r) {
  if (r.posts <= 0 || r.slots <= 0 ||
      r.level.size() != static_cast<std::size_t>(r.posts) * r.slots)
    throw ValidationError("ranking has wrong shape");
  for (int a = 0; a < r.posts; ++a)
    for (int s = 1; s < r.slots; ++s)
      if (!(r.at(a, s) < r.at(a, s + 1)))
        throw ValidationError(
            "ranking not strictly decreasing in congestion at a post");
}

inline void check_table(const UtilityTable& t) {
  if (t.posts <= 0 || t.slots <= 0 ||
      t.value.size() != static_cast<std::size_t>(t.posts) * t.slots)
    throw ValidationError("utility table has wrong shape");
  for (int a = 0; a < t.posts; ++a)
    for (int s = 1; s < t.slots; ++s)
      if (!(t.at(a, s) > t.at(a, s + 1)))
        throw ValidationError(
            "utility table not strictly decreasing in congestion");
}

// Both forms present: the induced weak orders must coincide.
inline void check_consistent(const OrdinalRanking& r, const UtilityTable& t) {
  for (int a = 0; a < r.posts; ++a)
    for (int s = 1; s <= r.slots; ++s)
      for (int b = 0; b < r.posts; ++b)
        for (int s2 = 1; s2 <= r.slots; ++s2) {
          int lr = r.at(a, s), l2 = r.at(b, s2);
          const Rational &ur = t.at(a, s), &u2 = t.at(b, s2);
          bool rank_better = lr < l2, rank_equal = lr == l2;
          bool util_better = ur > u2, util_equal = ur == u2;
          if (rank_better != util_better || rank_equal != util_equal)
            throw ValidationError(
                "ranking and utility table induce different orders");
        }
}

}  // namespace detail

// One agent's preferences. Anonymous agents carry an ordinal ranking, a
// utility table, or both (cross-checked); weighted agents carry a piecewise
// utility. Immutable once constructed.
class Preference {
 public:
  // An empty preference is only a staging value; Problem construction
  // rejects agents that still carry one.
  Preference() = default;

  static Preference ordinal(OrdinalRanking r) {
    detail::check_ordinal(r);
    Preference p;
    p.ranking_ = std::move(r);
    return p;
  }

  static Preference cardinal(UtilityTable t) {
    detail::check_table(t);
    Preference p;
    p.table_ = std::move(t);
    return p;
  }

  static Preference ordinal_and_cardinal(OrdinalRanking r, UtilityTable t) {
    detail::check_ordinal(r);
    detail::check_table(t);
    if (r.posts != t.posts || r.slots != t.slots)
      throw ValidationError("ranking and utility table shapes differ");
    detail::check_consistent(r, t);
    Preference p;
    p.ranking_ = std::move(r);
    p.table_ = std::move(t);
    return p;
  }

  // Validation against [w_i, W] happens at Problem construction, where the
  // weights are known.
  static Preference piecewise(PiecewiseUtility u) {
    Preference p;
    p.piecewise_ = std::move(u);
    return p;
  }

  bool has_ranking() const { return ranking_.has_value(); }
  bool has_table() const { return table_.has_value(); }
  bool is_piecewise() const { return piecewise_.has_value(); }
  bool has_cardinal() const { return has_table() || is_piecewise(); }

  const OrdinalRanking& ranking() const { return *ranking_; }
  const UtilityTable& table() const { return *table_; }
  const PiecewiseUtility& piecewise_utility() const { return *piecewise_; }

 private:
  std::optional<OrdinalRanking> ranking_;
  std::optional<UtilityTable> table_;
  std::optional<PiecewiseUtility> piecewise_;
};

// Linear interpolation of a utility table between floor and ceiling of the
// congestion; exact at integers, strictly decreasing in between. Defined for
// congestion in [1, n] only.
inline Rational eval_table_utility(const UtilityTable& t, int post,
                                   const Rational& congestion) {
  if (congestion < 1)
    throw DomainError("utility undefined below congestion 1");
  if (congestion > t.slots) throw DomainError("congestion exceeds agent count");
  if (is_integral(congestion)) return t.at(post, to_int(congestion));
  Integer lo = floor_rational(congestion);
  Integer hi = lo + 1;
  Rational frac = congestion - Rational(lo);
  int s = static_cast<int>(lo.convert_to<long long>());
  return (Rational(1) - frac) * t.at(post, s) + frac * t.at(post, s + 1);
}

// Piecewise-linear evaluation; domain is [first knot, last knot]. A single
// knot represents the degenerate one-agent domain [w, W] with w = W.
inline Rational eval_piecewise_utility(const PiecewiseUtility& u, int post,
                                       const Rational& congestion) {
  const auto& pts = u.per_post[post];
  if (congestion < pts.front().load)
    throw DomainError("utility undefined below the agent's weight");
  if (congestion > pts.back().load)
    throw DomainError("congestion exceeds total weight");
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (congestion <= pts[k + 1].load) {
      const Rational& z0 = pts[k].load;
      const Rational& z1 = pts[k + 1].load;
      Rational frac = (congestion - z0) / (z1 - z0);
      return (Rational(1) - frac) * pts[k].value + frac * pts[k + 1].value;
    }
  }
  return pts.back().value;
}

}  // namespace congestfair
