// Command line front end. All logic lives in the library; see README.md for
// the command reference.

#include <iostream>
#include <string>
#include <vector>

#include "congestfair/cli.hpp"

namespace {

void usage(std::ostream& out) {
  out << "usage: congestfair COMMAND [SUBCOMMAND] PROBLEM [flags]\n"
         "\n"
         "commands:\n"
         "  prefixes FILE                 acceptance caps per agent\n"
         "  topfair greedy FILE           construct one top-fair assignment\n"
         "  topfair enumerate FILE        count/list all top-fair assignments\n"
         "  topfair check FILE --assignment AF\n"
         "  competitive check FILE --assignment AF\n"
         "  competitive find FILE         all competitive assignments\n"
         "  fmeq FILE [--assignment AF]   free-mobility equilibrium\n"
         "  solve-frac FILE               fractional competitive congestion\n"
         "  decompose FILE                implementation lottery\n"
         "  verify-t1 FILE                check the lottery's bounds\n"
         "  solve-weighted FILE [--decompose]\n"
         "  report FILE [--lottery LF]    summary / lottery fairness audit\n"
         "\n"
         "flags: --format text|machine  --limit N  --seed S  --agent L\n"
         "       --all  --list  --alternatives N\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    usage(args.empty() ? std::cerr : std::cout);
    return args.empty() ? congestfair::cli::exit_error : 0;
  }
  return congestfair::cli::run(args, std::cout, std::cerr);
}
