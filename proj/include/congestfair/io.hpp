#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/problem.hpp"

namespace congestfair {

// Problem files ("congestfair v1") are line oriented:
//
//   congestfair v1
//   model anonymous            # or: model weighted
//   posts a b c
//   agent alpha                # weighted agents: agent alpha weight 10
//     prefix a=6 b=4 c=2
//     utility slack            # slack utility derived from the prefix
//     utility table a : 5 4 3 2 1 0        # one line per post, n values
//     utility piecewise a : (1, 8) (21, -12)
//     ranking (a,1) > (b,1) = (a,2) > ...  # full weak order, m*n allocations
//
// Rationals are written p or p/q. '#' starts a comment. serialize() emits
// the canonical form; canonical files round-trip byte-identically.

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline Rational parse_rational_or_throw(const std::string& tok,
                                        std::size_t line) {
  Rational r;
  if (!parse_rational(tok, r))
    throw ParseError(line, "malformed rational '" + tok + "'");
  return r;
}

struct RawAgent {
  std::string label;
  std::optional<Rational> weight;
  std::optional<std::vector<std::pair<std::string, Rational>>> prefix;
  bool slack = false;
  std::map<std::string, std::vector<Rational>> table_rows;
  std::map<std::string, std::vector<PiecewisePoint>> piecewise_rows;
  std::optional<std::string> ranking_line;
  std::size_t line = 0;
};

inline std::vector<std::pair<Rational, Rational>> parse_point_list(
    const std::string& body, std::size_t line) {
  std::vector<std::pair<Rational, Rational>> pts;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = body.find('(', pos);
    if (open == std::string::npos) break;
    std::size_t close = body.find(')', open);
    if (close == std::string::npos)
      throw ParseError(line, "unclosed '(' in point list");
    std::string inner = body.substr(open + 1, close - open - 1);
    std::size_t comma = inner.find(',');
    if (comma == std::string::npos)
      throw ParseError(line, "point needs two comma-separated rationals");
    Rational a = parse_rational_or_throw(trim(inner.substr(0, comma)), line);
    Rational b = parse_rational_or_throw(trim(inner.substr(comma + 1)), line);
    pts.emplace_back(a, b);
    pos = close + 1;
  }
  if (pts.empty()) throw ParseError(line, "empty point list");
  return pts;
}

// "(a,3)" -> (post label, congestion)
inline std::pair<std::string, int> parse_allocation(const std::string& tok,
                                                    std::size_t line) {
  if (tok.size() < 5 || tok.front() != '(' || tok.back() != ')')
    throw ParseError(line, "malformed allocation '" + tok + "'");
  std::string inner = tok.substr(1, tok.size() - 2);
  std::size_t comma = inner.find(',');
  if (comma == std::string::npos)
    throw ParseError(line, "malformed allocation '" + tok + "'");
  std::string label = trim(inner.substr(0, comma));
  std::string s = trim(inner.substr(comma + 1));
  for (char c : s)
    if (c < '0' || c > '9')
      throw ParseError(line, "malformed congestion in '" + tok + "'");
  return {label, std::stoi(s)};
}

inline OrdinalRanking parse_ranking_chain(
    const std::string& body, const std::vector<std::string>& posts, int slots,
    std::size_t line) {
  auto toks = split_ws(body);
  OrdinalRanking r;
  r.posts = static_cast<int>(posts.size());
  r.slots = slots;
  r.level.assign(static_cast<std::size_t>(r.posts) * slots, -1);
  int level = 0;
  bool expect_alloc = true;
  for (const auto& tok : toks) {
    if (expect_alloc) {
      auto [label, s] = parse_allocation(tok, line);
      auto it = std::find(posts.begin(), posts.end(), label);
      if (it == posts.end())
        throw ParseError(line, "unknown post '" + label + "' in ranking");
      if (s < 1 || s > slots)
        throw ParseError(line, "congestion out of range in ranking");
      int a = static_cast<int>(it - posts.begin());
      if (r.level[a * slots + (s - 1)] != -1)
        throw ParseError(line, "allocation listed twice in ranking");
      r.level[a * slots + (s - 1)] = level;
      expect_alloc = false;
    } else {
      if (tok == ">")
        ++level;
      else if (tok != "=")
        throw ParseError(line, "expected '>' or '=' in ranking");
      expect_alloc = true;
    }
  }
  if (expect_alloc) throw ParseError(line, "ranking ends with a separator");
  for (int v : r.level)
    if (v == -1)
      throw ParseError(line, "ranking must list every allocation");
  return r;
}

}  // namespace detail

inline Problem parse_problem(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;

  std::optional<CongestionModel> model;
  std::vector<std::string> posts;
  std::vector<detail::RawAgent> agents;
  bool header_seen = false;

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (!header_seen) {
      if (line != "congestfair v1")
        throw ParseError(lineno, "expected header 'congestfair v1'");
      header_seen = true;
      continue;
    }
    auto toks = detail::split_ws(line);
    const std::string& key = toks[0];

    if (key == "model") {
      if (toks.size() != 2 || (toks[1] != "anonymous" && toks[1] != "weighted"))
        throw ParseError(lineno, "model must be 'anonymous' or 'weighted'");
      model = toks[1] == "anonymous" ? CongestionModel::anonymous
                                     : CongestionModel::weighted;
    } else if (key == "posts") {
      if (toks.size() < 2) throw ParseError(lineno, "posts line needs labels");
      posts.assign(toks.begin() + 1, toks.end());
    } else if (key == "agent") {
      detail::RawAgent a;
      a.line = lineno;
      if (toks.size() == 2) {
        a.label = toks[1];
      } else if (toks.size() == 4 && toks[2] == "weight") {
        a.label = toks[1];
        a.weight = detail::parse_rational_or_throw(toks[3], lineno);
      } else {
        throw ParseError(lineno, "agent line: 'agent NAME [weight p/q]'");
      }
      agents.push_back(std::move(a));
    } else if (key == "prefix") {
      if (agents.empty()) throw ParseError(lineno, "prefix before any agent");
      std::vector<std::pair<std::string, Rational>> caps;
      for (std::size_t k = 1; k < toks.size(); ++k) {
        auto eq = toks[k].find('=');
        if (eq == std::string::npos)
          throw ParseError(lineno, "prefix item must be POST=CAP");
        caps.emplace_back(
            toks[k].substr(0, eq),
            detail::parse_rational_or_throw(toks[k].substr(eq + 1), lineno));
      }
      agents.back().prefix = std::move(caps);
    } else if (key == "utility") {
      if (agents.empty()) throw ParseError(lineno, "utility before any agent");
      if (toks.size() == 2 && toks[1] == "slack") {
        agents.back().slack = true;
      } else if (toks.size() >= 4 && toks[1] == "table") {
        auto colon = line.find(':');
        if (colon == std::string::npos)
          throw ParseError(lineno, "utility table needs ':'");
        std::string label = toks[2];
        auto values = detail::split_ws(line.substr(colon + 1));
        std::vector<Rational> row;
        for (const auto& v : values)
          row.push_back(detail::parse_rational_or_throw(v, lineno));
        if (!agents.back().table_rows.emplace(label, std::move(row)).second)
          throw ParseError(lineno, "duplicate table row for post " + label);
      } else if (toks.size() >= 4 && toks[1] == "piecewise") {
        auto colon = line.find(':');
        if (colon == std::string::npos)
          throw ParseError(lineno, "utility piecewise needs ':'");
        std::string label = toks[2];
        auto pts = detail::parse_point_list(line.substr(colon + 1), lineno);
        std::vector<PiecewisePoint> row;
        for (const auto& [z, v] : pts) row.push_back({z, v});
        if (!agents.back()
                 .piecewise_rows.emplace(label, std::move(row))
                 .second)
          throw ParseError(lineno, "duplicate piecewise row for " + label);
      } else {
        throw ParseError(lineno, "unknown utility form");
      }
    } else if (key == "ranking") {
      if (agents.empty()) throw ParseError(lineno, "ranking before any agent");
      agents.back().ranking_line = detail::trim(line.substr(7));
    } else {
      throw ParseError(lineno, "unknown directive '" + key + "'");
    }
  }
  if (!header_seen) throw ParseError(1, "empty problem file");
  if (!model) throw ParseError(1, "missing model line");
  if (posts.empty()) throw ParseError(1, "missing posts line");
  if (agents.empty()) throw ParseError(1, "no agents");

  bool anonymous = *model == CongestionModel::anonymous;
  int m = static_cast<int>(posts.size());
  int n = static_cast<int>(agents.size());

  Rational total_weight = 0;
  for (const auto& a : agents) {
    if (anonymous && a.weight)
      throw ParseError(a.line, "anonymous agents cannot carry weights");
    if (!anonymous && !a.weight)
      throw ParseError(a.line, "weighted agent needs a weight");
    total_weight += anonymous ? Rational(1) : *a.weight;
  }

  std::vector<AgentSpec> specs;
  for (const auto& a : agents) {
    AgentSpec spec;
    spec.label = a.label;
    if (!anonymous) spec.weight = *a.weight;

    std::optional<std::vector<Rational>> caps;
    if (a.prefix) {
      std::vector<Rational> c(m, Rational(0));
      for (const auto& [label, cap] : *a.prefix) {
        auto it = std::find(posts.begin(), posts.end(), label);
        if (it == posts.end())
          throw ParseError(a.line, "unknown post '" + label + "' in prefix");
        c[it - posts.begin()] = cap;
      }
      caps = std::move(c);
    }
    spec.declared_caps = caps;

    if (a.slack && !caps)
      throw ParseError(a.line, "utility slack needs a prefix line");

    auto table_from_rows = [&]() -> std::optional<UtilityTable> {
      if (a.table_rows.empty()) return std::nullopt;
      UtilityTable t;
      t.posts = m;
      t.slots = n;
      t.value.assign(static_cast<std::size_t>(m) * n, Rational(0));
      for (int p = 0; p < m; ++p) {
        auto it = a.table_rows.find(posts[p]);
        if (it == a.table_rows.end())
          throw ParseError(a.line, "missing table row for post " + posts[p]);
        if (static_cast<int>(it->second.size()) != n)
          throw ParseError(a.line, "table row for " + posts[p] + " needs " +
                                       std::to_string(n) + " values");
        for (int s = 0; s < n; ++s) t.value[p * n + s] = it->second[s];
      }
      return t;
    };

    if (anonymous) {
      std::optional<OrdinalRanking> ranking;
      if (a.ranking_line)
        ranking = detail::parse_ranking_chain(*a.ranking_line, posts, n, a.line);
      std::optional<UtilityTable> table = table_from_rows();
      if (a.slack) {
        if (table)
          throw ParseError(a.line, "give either slack or an explicit table");
        table = slack_table(*caps, n);
      }
      if (ranking && table)
        spec.preference =
            Preference::ordinal_and_cardinal(std::move(*ranking),
                                             std::move(*table));
      else if (ranking)
        spec.preference = Preference::ordinal(std::move(*ranking));
      else if (table)
        spec.preference = Preference::cardinal(std::move(*table));
      else
        throw ParseError(a.line, "agent " + a.label + " has no preference");
    } else {
      if (a.ranking_line || !a.table_rows.empty())
        throw ParseError(a.line,
                         "weighted agents use piecewise or slack utilities");
      PiecewiseUtility u;
      if (a.slack) {
        if (!a.piecewise_rows.empty())
          throw ParseError(a.line, "give either slack or piecewise rows");
        u = slack_piecewise(*caps, *a.weight, total_weight);
      } else {
        if (a.piecewise_rows.empty())
          throw ParseError(a.line, "agent " + a.label + " has no preference");
        u.per_post.resize(m);
        for (int p = 0; p < m; ++p) {
          auto it = a.piecewise_rows.find(posts[p]);
          if (it == a.piecewise_rows.end())
            throw ParseError(a.line,
                             "missing piecewise row for post " + posts[p]);
          u.per_post[p] = it->second;
        }
      }
      spec.preference = Preference::piecewise(std::move(u));
    }
    specs.push_back(std::move(spec));
  }

  return Problem(*model, posts, std::move(specs));
}

namespace detail {

inline std::string serialize_ranking(const Problem& problem, int agent) {
  const OrdinalRanking& r = problem.preference(agent).ranking();
  // allocations sorted by (level, post, s)
  std::vector<std::pair<int, std::pair<int, int>>> items;
  for (int a = 0; a < r.posts; ++a)
    for (int s = 1; s <= r.slots; ++s)
      items.push_back({r.at(a, s), {a, s}});
  std::sort(items.begin(), items.end());
  std::string out = "ranking";
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k > 0) out += items[k].first == items[k - 1].first ? " =" : " >";
    out += " (" + problem.post_label(items[k].second.first) + "," +
           std::to_string(items[k].second.second) + ")";
  }
  return out;
}

}  // namespace detail

inline std::string serialize_problem(const Problem& problem) {
  std::ostringstream out;
  out << "congestfair v1\n";
  out << "model " << (problem.anonymous() ? "anonymous" : "weighted") << "\n";
  out << "posts";
  for (int a = 0; a < problem.post_count(); ++a)
    out << " " << problem.post_label(a);
  out << "\n";

  int n = problem.agent_count(), m = problem.post_count();
  for (int i = 0; i < n; ++i) {
    out << "agent " << problem.agent_label(i);
    if (!problem.anonymous())
      out << " weight " << format_rational(problem.weight(i));
    out << "\n";
    const auto& caps = problem.declared_caps(i);
    if (caps) {
      out << "  prefix";
      for (int a = 0; a < m; ++a)
        if ((*caps)[a] != 0)
          out << " " << problem.post_label(a) << "="
              << format_rational((*caps)[a]);
      out << "\n";
    }
    const Preference& p = problem.preference(i);
    if (p.has_ranking()) out << "  " << detail::serialize_ranking(problem, i)
                             << "\n";
    if (p.has_table()) {
      bool is_slack = caps && p.table().value == slack_table(*caps, n).value;
      if (is_slack) {
        out << "  utility slack\n";
      } else {
        for (int a = 0; a < m; ++a) {
          out << "  utility table " << problem.post_label(a) << " :";
          for (int s = 1; s <= n; ++s)
            out << " " << format_rational(p.table().at(a, s));
          out << "\n";
        }
      }
    }
    if (p.is_piecewise()) {
      bool is_slack = false;
      if (caps) {
        PiecewiseUtility ref =
            slack_piecewise(*caps, problem.weight(i), problem.total_weight());
        is_slack = ref.per_post.size() == p.piecewise_utility().per_post.size();
        for (std::size_t a = 0; is_slack && a < ref.per_post.size(); ++a) {
          const auto& x = ref.per_post[a];
          const auto& y = p.piecewise_utility().per_post[a];
          if (x.size() != y.size()) is_slack = false;
          for (std::size_t k = 0; is_slack && k < x.size(); ++k)
            if (x[k].load != y[k].load || x[k].value != y[k].value)
              is_slack = false;
        }
      }
      if (is_slack) {
        out << "  utility slack\n";
      } else {
        for (int a = 0; a < m; ++a) {
          out << "  utility piecewise " << problem.post_label(a) << " :";
          for (const auto& pt : p.piecewise_utility().per_post[a])
            out << " (" << format_rational(pt.load) << ", "
                << format_rational(pt.value) << ")";
          out << "\n";
        }
      }
    }
  }
  return out.str();
}

// Assignment files: header "congestfair-assignment v1", one "AGENT POST"
// line per agent.
inline Assignment parse_assignment(const Problem& problem,
                                   const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  bool header_seen = false;
  Assignment asg;
  asg.post_of.assign(problem.agent_count(), -1);
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "congestfair-assignment v1")
        throw ParseError(lineno, "expected header 'congestfair-assignment v1'");
      header_seen = true;
      continue;
    }
    auto toks = detail::split_ws(line);
    if (toks.size() != 2)
      throw ParseError(lineno, "expected 'AGENT POST'");
    int i = problem.agent_index(toks[0]);
    if (i < 0) throw ParseError(lineno, "unknown agent '" + toks[0] + "'");
    int a = problem.post_index(toks[1]);
    if (a < 0) throw ParseError(lineno, "unknown post '" + toks[1] + "'");
    if (asg.post_of[i] != -1)
      throw ParseError(lineno, "agent '" + toks[0] + "' placed twice");
    asg.post_of[i] = a;
  }
  for (int i = 0; i < problem.agent_count(); ++i)
    if (asg.post_of[i] == -1)
      throw ValidationError("agent '" + problem.agent_label(i) +
                            "' not placed");
  return asg;
}

inline std::string serialize_assignment(const Problem& problem,
                                        const Assignment& asg) {
  std::ostringstream out;
  out << "congestfair-assignment v1\n";
  for (int i = 0; i < problem.agent_count(); ++i)
    out << problem.agent_label(i) << " "
        << problem.post_label(asg.post_of[i]) << "\n";
  return out.str();
}

// Lottery files: header "congestfair-lottery v1", then "entry PROB" blocks
// of AGENT POST lines.
inline Lottery parse_lottery(const Problem& problem, const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  bool header_seen = false;
  Lottery lottery;
  std::vector<int>* current = nullptr;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "congestfair-lottery v1")
        throw ParseError(lineno, "expected header 'congestfair-lottery v1'");
      header_seen = true;
      continue;
    }
    auto toks = detail::split_ws(line);
    if (toks[0] == "entry") {
      if (toks.size() != 2) throw ParseError(lineno, "entry PROB");
      LotteryEntry e;
      e.probability = detail::parse_rational_or_throw(toks[1], lineno);
      if (e.probability <= 0)
        throw ParseError(lineno, "entry probability must be positive");
      e.assignment.post_of.assign(problem.agent_count(), -1);
      lottery.entries.push_back(std::move(e));
      current = &lottery.entries.back().assignment.post_of;
    } else {
      if (!current) throw ParseError(lineno, "placement before any entry");
      if (toks.size() != 2) throw ParseError(lineno, "expected 'AGENT POST'");
      int i = problem.agent_index(toks[0]);
      if (i < 0) throw ParseError(lineno, "unknown agent '" + toks[0] + "'");
      int a = problem.post_index(toks[1]);
      if (a < 0) throw ParseError(lineno, "unknown post '" + toks[1] + "'");
      (*current)[i] = a;
    }
  }
  if (lottery.entries.empty()) throw ValidationError("lottery has no entries");
  for (const auto& e : lottery.entries)
    for (int i = 0; i < problem.agent_count(); ++i)
      if (e.assignment.post_of[i] == -1)
        throw ValidationError("agent '" + problem.agent_label(i) +
                              "' missing from a lottery entry");
  if (lottery.total_probability() != 1)
    throw ValidationError("lottery probabilities must sum to 1");
  return lottery;
}

inline std::string serialize_lottery(const Problem& problem,
                                     const Lottery& lottery) {
  std::ostringstream out;
  out << "congestfair-lottery v1\n";
  for (const auto& e : lottery.entries) {
    out << "entry " << format_rational(e.probability) << "\n";
    for (int i = 0; i < problem.agent_count(); ++i)
      out << problem.agent_label(i) << " "
          << problem.post_label(e.assignment.post_of[i]) << "\n";
  }
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace congestfair
