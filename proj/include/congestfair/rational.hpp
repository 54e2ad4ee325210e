#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

namespace congestfair {

// All quantities in this library (weights, congestion, utilities,
// probabilities) are exact rationals; no floating point ever reaches a
// result. Doubles appear only as search heuristics inside solvers.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline Integer floor_rational(const Rational& x) {
  Integer num = numerator(x);
  Integer den = denominator(x);
  Integer q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) --q;
  return q;
}

inline Integer ceil_rational(const Rational& x) {
  Integer num = numerator(x);
  Integer den = denominator(x);
  Integer q = num / den;
  if (num > 0 && q * den != num) ++q;
  return q;
}

inline bool is_integral(const Rational& x) { return denominator(x) == 1; }

// Fits desk-scale counts; callers guarantee range.
inline int to_int(const Rational& x) {
  return static_cast<int>(numerator(x).convert_to<long long>());
}

inline double to_double(const Rational& x) { return x.convert_to<double>(); }

// Canonical text form: "p" for integers, "p/q" otherwise.
inline std::string format_rational(const Rational& x) {
  std::string s = numerator(x).str();
  if (denominator(x) != 1) {
    s += '/';
    s += denominator(x).str();
  }
  return s;
}

// Accepts "p", "p/q", optional leading '-'. Returns false on malformed input.
inline bool parse_rational(const std::string& text, Rational& out) {
  if (text.empty()) return false;
  auto digits_ok = [](const std::string& t) {
    if (t.empty()) return false;
    std::size_t i = (t[0] == '-') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (t[i] < '0' || t[i] > '9') return false;
    return true;
  };
  auto slash = text.find('/');
  if (slash == std::string::npos) {
    if (!digits_ok(text)) return false;
    out = Rational(Integer(text));
    return true;
  }
  std::string num = text.substr(0, slash);
  std::string den = text.substr(slash + 1);
  if (!digits_ok(num) || !digits_ok(den)) return false;
  Integer d(den);
  if (d <= 0) return false;
  out = Rational(Integer(num), d);
  return true;
}

inline Rational rational_min(const Rational& a, const Rational& b) {
  return a < b ? a : b;
}

inline Rational rational_max(const Rational& a, const Rational& b) {
  return a < b ? b : a;
}

}  // namespace congestfair
