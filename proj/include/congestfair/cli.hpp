#pragma once

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "congestfair/competitive_det.hpp"
#include "congestfair/competitive_frac.hpp"
#include "congestfair/error.hpp"
#include "congestfair/guarantees.hpp"
#include "congestfair/io.hpp"
#include "congestfair/problem.hpp"
#include "congestfair/weighted_frac.hpp"

namespace congestfair::cli {

// Exit codes: 0 success, 2 infeasible / not found / check failed,
// 3 enumeration limit exceeded, 1 any other error.
constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_not_found = 2;
constexpr int exit_limit = 3;

namespace detail {

struct Options {
  std::string command;
  std::string subcommand;
  std::string problem_path;
  std::optional<std::string> assignment_path;
  std::optional<std::string> lottery_path;
  std::optional<std::string> agent;
  bool machine = false;
  bool list = false;
  bool all = false;
  bool with_decompose = false;
  unsigned long long limit = 1'000'000;
  unsigned seed = 0;
  int alternatives = 0;
};

inline Options parse_args(const std::vector<std::string>& args) {
  Options opt;
  std::vector<std::string> positional;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string& a = args[k];
    auto need_value = [&]() -> const std::string& {
      if (k + 1 >= args.size()) throw Error("flag " + a + " needs a value");
      return args[++k];
    };
    if (a == "--format") {
      const std::string& v = need_value();
      if (v == "machine")
        opt.machine = true;
      else if (v == "text")
        opt.machine = false;
      else
        throw Error("--format must be text or machine");
    } else if (a == "--assignment") {
      opt.assignment_path = need_value();
    } else if (a == "--lottery") {
      opt.lottery_path = need_value();
    } else if (a == "--agent") {
      opt.agent = need_value();
    } else if (a == "--limit") {
      opt.limit = std::stoull(need_value());
    } else if (a == "--seed") {
      opt.seed = static_cast<unsigned>(std::stoul(need_value()));
    } else if (a == "--alternatives") {
      opt.alternatives = std::stoi(need_value());
    } else if (a == "--list") {
      opt.list = true;
    } else if (a == "--all") {
      opt.all = true;
    } else if (a == "--decompose") {
      opt.with_decompose = true;
    } else if (!a.empty() && a[0] == '-') {
      throw Error("unknown flag " + a);
    } else {
      positional.push_back(a);
    }
  }
  if (positional.empty()) throw Error("missing command");
  opt.command = positional[0];
  std::size_t next = 1;
  if ((opt.command == "topfair" || opt.command == "competitive") &&
      positional.size() > 1) {
    opt.subcommand = positional[1];
    next = 2;
  }
  if (next < positional.size()) opt.problem_path = positional[next++];
  if (next < positional.size()) throw Error("unexpected extra argument");
  if (opt.problem_path.empty()) throw Error("missing problem file");
  return opt;
}

inline void print_assignment(std::ostream& out, const Problem& problem,
                             const Assignment& asg, const Options& opt,
                             const std::string& key_prefix) {
  if (opt.machine) {
    for (int i = 0; i < problem.agent_count(); ++i)
      out << key_prefix << "assign." << problem.agent_label(i) << "="
          << problem.post_label(asg.post_of[i]) << "\n";
  } else {
    for (int a = 0; a < problem.post_count(); ++a) {
      out << "  " << problem.post_label(a) << ":";
      for (int i = 0; i < problem.agent_count(); ++i)
        if (asg.post_of[i] == a) out << " " << problem.agent_label(i);
      out << "\n";
    }
  }
}

inline void print_profile_line(std::ostream& out, const Problem& problem,
                               const std::vector<Rational>& load,
                               const Options& opt,
                               const std::string& key) {
  if (opt.machine) {
    for (int a = 0; a < problem.post_count(); ++a)
      out << key << "." << problem.post_label(a) << "="
          << format_rational(load[a]) << "\n";
  } else {
    out << key << ":";
    for (int a = 0; a < problem.post_count(); ++a)
      out << " " << problem.post_label(a) << "=" << format_rational(load[a]);
    out << "\n";
  }
}

inline int cmd_prefixes(const Problem& problem, const Options& opt,
                        std::ostream& out) {
  for (int i = 0; i < problem.agent_count(); ++i) {
    if (opt.agent && problem.agent_label(i) != *opt.agent) continue;
    if (problem.anonymous() && opt.all) {
      PrefixFamily family = anonymous_prefixes(problem, i);
      if (opt.machine) {
        out << "prefix." << problem.agent_label(i)
            << ".count=" << family.count << "\n";
        out << "prefix." << problem.agent_label(i) << ".truncated="
            << (family.truncated ? "true" : "false") << "\n";
        for (std::size_t k = 0; k < family.prefixes.size(); ++k)
          for (int a = 0; a < problem.post_count(); ++a)
            out << "prefix." << problem.agent_label(i) << "." << k << "."
                << problem.post_label(a) << "="
                << format_rational(family.prefixes[k].caps[a]) << "\n";
      } else {
        out << problem.agent_label(i) << ": " << family.count
            << " prefix(es)" << (family.truncated ? " (truncated)" : "")
            << "\n";
        for (const auto& p : family.prefixes) {
          out << " ";
          for (int a = 0; a < problem.post_count(); ++a)
            out << " " << problem.post_label(a) << "="
                << format_rational(p.caps[a]);
          out << "\n";
        }
      }
    } else {
      Prefix p = canonical_prefix(problem, i);
      if (opt.machine) {
        for (int a = 0; a < problem.post_count(); ++a)
          out << "prefix." << problem.agent_label(i) << "."
              << problem.post_label(a) << "=" << format_rational(p.caps[a])
              << "\n";
      } else {
        out << problem.agent_label(i) << ":";
        for (int a = 0; a < problem.post_count(); ++a)
          out << " " << problem.post_label(a) << "="
              << format_rational(p.caps[a]);
        out << "\n";
      }
    }
  }
  return exit_ok;
}

inline int cmd_topfair(const Problem& problem, const Options& opt,
                       std::ostream& out) {
  PrefixProfile profile = effective_prefix_profile(problem);
  if (opt.subcommand == "greedy") {
    Assignment asg = greedy_top_fair(problem, profile);
    if (!opt.machine) out << "top-fair assignment:\n";
    print_assignment(out, problem, asg, opt, "");
    print_profile_line(out, problem, congestion_profile(problem, asg), opt,
                       "congestion");
    return exit_ok;
  }
  if (opt.subcommand == "enumerate") {
    TopFairSet set = enumerate_top_fair(problem, profile, opt.limit);
    if (opt.machine) {
      out << "assignments=" << set.assignments.size() << "\n";
      out << "profiles=" << set.congestion_profiles.size() << "\n";
      if (problem.anonymous())
        out << "unique_congestion="
            << (has_unique_fair_congestion(problem, profile) ? "true"
                                                             : "false")
            << "\n";
    } else {
      out << "top-fair assignments: " << set.assignments.size() << "\n";
      out << "congestion profiles: " << set.congestion_profiles.size() << "\n";
    }
    if (opt.list) {
      std::size_t k = 0;
      for (const auto& asg : set.assignments) {
        if (opt.machine) {
          for (int i = 0; i < problem.agent_count(); ++i)
            out << "assign." << k << "." << problem.agent_label(i) << "="
                << problem.post_label(asg.post_of[i]) << "\n";
        } else {
          out << "#" << k << "\n";
          print_assignment(out, problem, asg, opt, "");
        }
        ++k;
      }
    }
    return exit_ok;
  }
  if (opt.subcommand == "check") {
    if (!opt.assignment_path)
      throw Error("topfair check needs --assignment FILE");
    Assignment asg =
        parse_assignment(problem, read_file(*opt.assignment_path));
    bool ok = is_top_fair(problem, profile, asg);
    out << (opt.machine ? std::string("topfair=") + (ok ? "true" : "false")
                        : std::string(ok ? "top-fair" : "not top-fair"))
        << "\n";
    return ok ? exit_ok : exit_not_found;
  }
  throw Error("topfair needs a subcommand: greedy | enumerate | check");
}

inline int cmd_competitive(const Problem& problem, const Options& opt,
                           std::ostream& out) {
  if (opt.subcommand == "check") {
    if (!opt.assignment_path)
      throw Error("competitive check needs --assignment FILE");
    Assignment asg =
        parse_assignment(problem, read_file(*opt.assignment_path));
    bool ok = is_competitive(problem, asg);
    out << (opt.machine ? std::string("competitive=") + (ok ? "true" : "false")
                        : std::string(ok ? "competitive" : "not competitive"))
        << "\n";
    return ok ? exit_ok : exit_not_found;
  }
  if (opt.subcommand == "find") {
    std::vector<Assignment> found = find_competitive(problem, opt.limit);
    if (opt.machine)
      out << "count=" << found.size() << "\n";
    else
      out << "competitive assignments: " << found.size() << "\n";
    std::size_t k = 0;
    for (const auto& asg : found) {
      if (opt.machine) {
        for (int i = 0; i < problem.agent_count(); ++i)
          out << "assign." << k << "." << problem.agent_label(i) << "="
              << problem.post_label(asg.post_of[i]) << "\n";
      } else {
        out << "#" << k << "\n";
        print_assignment(out, problem, asg, opt, "");
      }
      ++k;
    }
    return found.empty() ? exit_not_found : exit_ok;
  }
  throw Error("competitive needs a subcommand: check | find");
}

inline int cmd_fmeq(const Problem& problem, const Options& opt,
                    std::ostream& out) {
  if (opt.assignment_path) {
    Assignment asg =
        parse_assignment(problem, read_file(*opt.assignment_path));
    bool ok = is_free_mobility_equilibrium(problem, asg);
    out << (opt.machine
                ? std::string("equilibrium=") + (ok ? "true" : "false")
                : std::string(ok ? "equilibrium" : "not an equilibrium"))
        << "\n";
    return ok ? exit_ok : exit_not_found;
  }
  auto asg = find_free_mobility_equilibrium(problem, opt.seed);
  if (!asg) {
    out << (opt.machine ? "equilibrium=none" : "no equilibrium exists")
        << "\n";
    return exit_not_found;
  }
  if (!opt.machine) out << "free-mobility equilibrium:\n";
  print_assignment(out, problem, *asg, opt, "");
  return exit_ok;
}

inline void print_solution(const Problem& problem,
                           const FractionalCongestion& sigma,
                           const std::vector<DemandSet>& demands,
                           const SemiStochasticMatrix& pi, const Options& opt,
                           std::ostream& out) {
  print_profile_line(out, problem, sigma.load, opt, "sigma");
  for (int i = 0; i < problem.agent_count(); ++i) {
    if (opt.machine) {
      out << "demand." << problem.agent_label(i) << "=";
      for (std::size_t k = 0; k < demands[i].posts.size(); ++k)
        out << (k ? "," : "") << problem.post_label(demands[i].posts[k]);
      out << "\n";
    } else {
      out << "demand " << problem.agent_label(i) << ": {";
      for (std::size_t k = 0; k < demands[i].posts.size(); ++k)
        out << (k ? ", " : "") << problem.post_label(demands[i].posts[k]);
      out << "}\n";
    }
  }
  for (int i = 0; i < problem.agent_count(); ++i)
    for (int a = 0; a < problem.post_count(); ++a)
      if (pi.at(i, a) != 0) {
        if (opt.machine)
          out << "pi." << problem.agent_label(i) << "."
              << problem.post_label(a) << "=" << format_rational(pi.at(i, a))
              << "\n";
        else
          out << "pi " << problem.agent_label(i) << " -> "
              << problem.post_label(a) << ": "
              << format_rational(pi.at(i, a)) << "\n";
      }
}

inline void print_lottery(const Problem& problem, const Lottery& lottery,
                          const Options& opt, std::ostream& out,
                          const std::string& key_prefix = "") {
  std::size_t k = 0;
  for (const auto& e : lottery.entries) {
    if (opt.machine) {
      out << key_prefix << "lottery." << k
          << ".prob=" << format_rational(e.probability) << "\n";
      auto load = congestion_profile(problem, e.assignment);
      for (int a = 0; a < problem.post_count(); ++a)
        out << key_prefix << "lottery." << k << ".congestion."
            << problem.post_label(a) << "=" << format_rational(load[a])
            << "\n";
      for (int i = 0; i < problem.agent_count(); ++i)
        out << key_prefix << "lottery." << k << ".assign."
            << problem.agent_label(i) << "="
            << problem.post_label(e.assignment.post_of[i]) << "\n";
    } else {
      out << "entry " << format_rational(e.probability) << "\n";
      print_assignment(out, problem, e.assignment, opt, "");
    }
    ++k;
  }
}

inline int cmd_solve_frac(const Problem& problem, const Options& opt,
                          std::ostream& out) {
  CompetitiveSolution sol = solve_fractional_competitive(problem);
  print_solution(problem, sol.sigma, sol.demands, sol.matrix, opt, out);
  for (int a : sol.ambiguous_posts)
    out << (opt.machine ? "ambiguous=" : "congestion-ambiguous post: ")
        << problem.post_label(a) << "\n";
  return exit_ok;
}

inline int cmd_decompose(const Problem& problem, const Options& opt,
                         std::ostream& out) {
  CompetitiveSolution sol = solve_fractional_competitive(problem);
  print_profile_line(out, problem, sol.sigma.load, opt, "sigma");
  if (opt.alternatives > 0) {
    auto variants = decompose_variants(problem, sol, opt.alternatives);
    std::size_t v = 0;
    for (const auto& lot : variants) {
      std::string prefix = "variant." + std::to_string(v) + ".";
      if (!opt.machine) out << "variant " << v << "\n";
      print_lottery(problem, lot.lottery, opt, out,
                    opt.machine ? prefix : "");
      ++v;
    }
    return exit_ok;
  }
  ImplementationLottery lot = decompose(problem, sol);
  print_lottery(problem, lot.lottery, opt, out);
  return exit_ok;
}

inline int cmd_verify_t1(const Problem& problem, const Options& opt,
                         std::ostream& out) {
  CompetitiveSolution sol = solve_fractional_competitive(problem);
  ImplementationLottery lot = decompose(problem, sol);
  BoundsReport report = verify_approximation_bounds(problem, sol, lot);
  auto line = [&](const std::string& name, bool ok) {
    if (opt.machine)
      out << name << "=" << (ok ? "pass" : "fail") << "\n";
    else
      out << name << ": " << (ok ? "pass" : "FAIL") << "\n";
  };
  line("near_fairness", report.near_fairness);
  line("utility_spread", report.utility_spread);
  line("near_competitiveness", report.near_competitiveness);
  line("near_efficiency", report.near_efficiency);
  if (report.floor_applicable)
    line("efficiency_floor", report.efficiency_floor);
  return report.all_passed() ? exit_ok : exit_not_found;
}

inline int cmd_solve_weighted(const Problem& problem, const Options& opt,
                              std::ostream& out) {
  WeightedCompetitiveSolution sol = solve_weighted_competitive(problem);
  print_solution(problem, sol.sigma, sol.demands, sol.matrix, opt, out);
  if (opt.machine)
    out << "f_crowded=" << (sol.f_crowded ? "true" : "false") << "\n";
  else
    out << (sol.f_crowded ? "f-crowded (unique)"
                          : "not f-crowded (uniqueness not guaranteed)")
        << "\n";
  if (opt.with_decompose || opt.alternatives > 0) {
    if (opt.alternatives > 0) {
      auto variants = birkhoff_variants(problem, sol, opt.alternatives);
      std::size_t v = 0;
      for (const auto& lot : variants) {
        std::string prefix = "variant." + std::to_string(v) + ".";
        if (!opt.machine) out << "variant " << v << "\n";
        print_lottery(problem, lot, opt, out, opt.machine ? prefix : "");
        ++v;
      }
    } else {
      print_lottery(problem, birkhoff_decompose(problem, sol), opt, out);
    }
  }
  return exit_ok;
}

inline int cmd_report(const Problem& problem, const Options& opt,
                      std::ostream& out) {
  if (opt.machine) {
    out << "model=" << (problem.anonymous() ? "anonymous" : "weighted")
        << "\n";
    out << "posts=" << problem.post_count() << "\n";
    out << "agents=" << problem.agent_count() << "\n";
  } else {
    out << "model: " << (problem.anonymous() ? "anonymous" : "weighted")
        << "  posts: " << problem.post_count()
        << "  agents: " << problem.agent_count() << "\n";
  }
  PrefixProfile profile = effective_prefix_profile(problem);
  if (!opt.machine) out << "caps:\n";
  for (int i = 0; i < problem.agent_count(); ++i) {
    if (opt.machine) {
      for (int a = 0; a < problem.post_count(); ++a)
        out << "caps." << problem.agent_label(i) << "."
            << problem.post_label(a) << "="
            << format_rational(profile[i].caps[a]) << "\n";
    } else {
      out << "  " << problem.agent_label(i) << ":";
      for (int a = 0; a < problem.post_count(); ++a)
        out << " " << problem.post_label(a) << "="
            << format_rational(profile[i].caps[a]);
      out << "\n";
    }
  }

  if (opt.lottery_path) {
    Lottery lottery = parse_lottery(problem, read_file(*opt.lottery_path));
    LotteryFairnessReport rep =
        lottery_fairness_report(problem, profile, lottery);
    std::size_t k = 0;
    for (const auto& e : rep.entries) {
      if (opt.machine) {
        out << "fairness." << k << ".prob=" << format_rational(e.probability)
            << "\n";
        out << "fairness." << k << ".fair=" << (e.fair ? "true" : "false")
            << "\n";
        out << "fairness." << k
            << ".margin=" << format_rational(e.worst_margin) << "\n";
      } else {
        out << "entry " << k << " (prob "
            << format_rational(e.probability) << "): "
            << (e.fair ? "top-fair"
                       : "violates by " + format_rational(e.worst_margin))
            << "\n";
      }
      ++k;
    }
    if (opt.machine)
      out << "violation_probability="
          << format_rational(rep.violation_probability) << "\n";
    else
      out << "violation probability: "
          << format_rational(rep.violation_probability) << "\n";
    return exit_ok;
  }

  Assignment greedy = greedy_top_fair(problem, profile);
  if (!opt.machine) out << "greedy top-fair assignment:\n";
  print_assignment(out, problem, greedy, opt, "greedy.");
  print_profile_line(out, problem, congestion_profile(problem, greedy), opt,
                     opt.machine ? "greedy.congestion" : "congestion");
  return exit_ok;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  try {
    detail::Options opt = detail::parse_args(args);
    Problem problem = parse_problem(read_file(opt.problem_path));
    if (opt.command == "prefixes") return detail::cmd_prefixes(problem, opt, out);
    if (opt.command == "topfair") return detail::cmd_topfair(problem, opt, out);
    if (opt.command == "competitive")
      return detail::cmd_competitive(problem, opt, out);
    if (opt.command == "fmeq") return detail::cmd_fmeq(problem, opt, out);
    if (opt.command == "solve-frac")
      return detail::cmd_solve_frac(problem, opt, out);
    if (opt.command == "decompose")
      return detail::cmd_decompose(problem, opt, out);
    if (opt.command == "verify-t1")
      return detail::cmd_verify_t1(problem, opt, out);
    if (opt.command == "solve-weighted")
      return detail::cmd_solve_weighted(problem, opt, out);
    if (opt.command == "report") return detail::cmd_report(problem, opt, out);
    throw Error("unknown command '" + opt.command + "'");
  } catch (const LimitError& e) {
    err << "limit exceeded: " << e.what()
        << " (partial count " << e.partial_count() << ")\n";
    return exit_limit;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_error;
  }
}

}  // namespace congestfair::cli
