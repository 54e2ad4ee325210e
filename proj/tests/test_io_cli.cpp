#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "congestfair/cli.hpp"
#include "testutil.hpp"

using namespace congestfair;
using testutil::fixture_path;
using testutil::load_fixture;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("canonical files round-trip byte-identically") {
  for (const char* name :
       {"example1.cf", "example2.cf", "example3.cf", "example4.cf",
        "example5_1.cf", "example5_2.cf", "example6.cf", "example7.cf"}) {
    std::string text = read_file(fixture_path(name));
    Problem p = parse_problem(text);
    REQUIRE(serialize_problem(p) == text);
  }
}

TEST_CASE("parsing recovers the instances exactly") {
  Problem ex2 = load_fixture("example2.cf");
  REQUIRE(ex2.agent_count() == 18);
  REQUIRE(ex2.post_count() == 4);
  Problem ex7 = load_fixture("example7.cf");
  REQUIRE_FALSE(ex7.anonymous());
  REQUIRE(ex7.total_weight() == 21);
  REQUIRE(ex7.weight(ex7.agent_index("gamma")) == 1);
}

TEST_CASE("parse and validation errors carry context") {
  SECTION("missing header") {
    try {
      parse_problem("model anonymous\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(e.line() == 1);
    }
  }
  SECTION("empty agent list") {
    REQUIRE_THROWS_AS(
        parse_problem("congestfair v1\nmodel anonymous\nposts a\n"),
        ParseError);
  }
  SECTION("malformed rational is located") {
    std::string text =
        "congestfair v1\nmodel weighted\nposts a\nagent x weight 1/y\n";
    try {
      parse_problem(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      REQUIRE(e.line() == 4);
    }
  }
  SECTION("non-monotone utility is a validation error") {
    std::string text =
        "congestfair v1\nmodel anonymous\nposts a\nagent x\n"
        "  utility table a : 1 1 1\n"
        "agent y\n  utility table a : 3 2 1\n"
        "agent z\n  utility table a : 3 2 1\n";
    REQUIRE_THROWS_AS(parse_problem(text), ValidationError);
  }
  SECTION("rankings must cover every allocation once") {
    std::string text =
        "congestfair v1\nmodel anonymous\nposts a b\nagent x\n"
        "  ranking (a,1) > (b,1) > (a,2)\n"
        "agent y\n  ranking (a,1) > (b,1) > (a,2) > (b,2)\n";
    REQUIRE_THROWS_AS(parse_problem(text), ParseError);
  }
}

TEST_CASE("assignment files") {
  Problem p = load_fixture("example4.cf");
  std::string text =
      "congestfair-assignment v1\nalpha a\nbeta b\ngamma b\n";
  Assignment asg = parse_assignment(p, text);
  REQUIRE(asg.post_of == std::vector<int>{0, 1, 1});
  REQUIRE(serialize_assignment(p, asg) == text);
  REQUIRE_THROWS_AS(parse_assignment(p, "congestfair-assignment v1\nalpha a\n"),
                    ValidationError);
  REQUIRE_THROWS_AS(
      parse_assignment(p, "congestfair-assignment v1\nnobody a\n"),
      ParseError);
}

TEST_CASE("lottery files") {
  Problem p = load_fixture("example7.cf");
  Lottery l1 = parse_lottery(p, read_file(fixture_path("example7_l1.cfl")));
  REQUIRE(l1.entries.size() == 4);
  REQUIRE(l1.total_probability() == 1);
  std::string bad =
      "congestfair-lottery v1\nentry 1/3\nalpha a\nbeta b\ngamma b\n";
  REQUIRE_THROWS_AS(parse_lottery(p, bad), ValidationError);
  // round-trip through the serializer
  Lottery back = parse_lottery(p, serialize_lottery(p, l1));
  REQUIRE(back.entries.size() == l1.entries.size());
  for (std::size_t k = 0; k < back.entries.size(); ++k) {
    REQUIRE(back.entries[k].probability == l1.entries[k].probability);
    REQUIRE(back.entries[k].assignment == l1.entries[k].assignment);
  }
}

TEST_CASE("command line surface") {
  SECTION("prefixes") {
    auto r = run_cli({"prefixes", fixture_path("example7.cf"), "--format",
                      "machine"});
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("prefix.alpha.a=16") != std::string::npos);
    REQUIRE(r.out.find("prefix.gamma.b=13") != std::string::npos);
  }
  SECTION("topfair greedy and enumerate") {
    auto r = run_cli({"topfair", "greedy", fixture_path("example2.cf"),
                      "--format", "machine"});
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("congestion.a=4") != std::string::npos);
    REQUIRE(r.out.find("congestion.c=8") != std::string::npos);

    auto e = run_cli({"topfair", "enumerate", fixture_path("example3.cf"),
                      "--format", "machine"});
    REQUIRE(e.code == 0);
    REQUIRE(e.out.find("assignments=794") != std::string::npos);
    REQUIRE(e.out.find("profiles=15") != std::string::npos);

    auto lim = run_cli({"topfair", "enumerate", fixture_path("example3.cf"),
                        "--limit", "10"});
    REQUIRE(lim.code == cli::exit_limit);
  }
  SECTION("topfair and competitive checks") {
    std::string asg_path = "/tmp/congestfair_test_assignment.cfa";
    {
      std::ofstream f(asg_path);
      f << "congestfair-assignment v1\nalpha a\nbeta b\ngamma b\n";
    }
    auto ok = run_cli({"topfair", "check", fixture_path("example4.cf"),
                       "--assignment", asg_path, "--format", "machine"});
    REQUIRE(ok.code == 0);
    REQUIRE(ok.out.find("topfair=true") != std::string::npos);
    auto comp = run_cli({"competitive", "check", fixture_path("example4.cf"),
                         "--assignment", asg_path, "--format", "machine"});
    // alpha alone at a: gamma would rather join a at price 6 (slack 2 > 0)
    REQUIRE(comp.code == cli::exit_not_found);
    REQUIRE(comp.out.find("competitive=false") != std::string::npos);
  }
  SECTION("competitive find exit codes") {
    auto none = run_cli({"competitive", "find", fixture_path("example3.cf")});
    REQUIRE(none.code == cli::exit_not_found);
    auto one = run_cli({"competitive", "find", fixture_path("example5_1.cf"),
                        "--format", "machine"});
    REQUIRE(one.code == 0);
    REQUIRE(one.out.find("count=1") != std::string::npos);
  }
  SECTION("fmeq") {
    auto r = run_cli({"fmeq", fixture_path("example5_1.cf"), "--format",
                      "machine"});
    REQUIRE(r.code == 0);
    auto seeded = run_cli({"fmeq", fixture_path("example5_1.cf"), "--seed",
                           "7", "--format", "machine"});
    REQUIRE(seeded.code == 0);
  }
  SECTION("solve-frac, decompose and verify") {
    auto r = run_cli({"solve-frac", fixture_path("example3.cf"), "--format",
                      "machine"});
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("sigma.a=14/3") != std::string::npos);
    REQUIRE(r.out.find("sigma.b=8/3") != std::string::npos);
    REQUIRE(r.out.find("demand.alpha1=a,b") != std::string::npos);

    auto d = run_cli({"decompose", fixture_path("example6.cf"), "--format",
                      "machine"});
    REQUIRE(d.code == 0);
    REQUIRE(d.out.find("sigma.a=13/3") != std::string::npos);
    REQUIRE(d.out.find("lottery.0.prob=") != std::string::npos);

    auto v = run_cli({"verify-t1", fixture_path("example6.cf"), "--format",
                      "machine"});
    REQUIRE(v.code == 0);
    REQUIRE(v.out.find("near_fairness=pass") != std::string::npos);
    REQUIRE(v.out.find("near_efficiency=pass") != std::string::npos);
  }
  SECTION("solve-weighted") {
    auto r = run_cli({"solve-weighted", fixture_path("example7.cf"),
                      "--format", "machine", "--decompose"});
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("sigma.a=11") != std::string::npos);
    REQUIRE(r.out.find("sigma.b=10") != std::string::npos);
    REQUIRE(r.out.find("f_crowded=false") != std::string::npos);
    REQUIRE(r.out.find("lottery.0.prob=") != std::string::npos);
  }
  SECTION("report with a lottery audits fairness") {
    auto r1 = run_cli({"report", fixture_path("example7.cf"), "--lottery",
                       fixture_path("example7_l1.cfl"), "--format",
                       "machine"});
    REQUIRE(r1.code == 0);
    REQUIRE(r1.out.find("violation_probability=1/2") != std::string::npos);
    auto r2 = run_cli({"report", fixture_path("example7.cf"), "--lottery",
                       fixture_path("example7_l2.cfl"), "--format",
                       "machine"});
    REQUIRE(r2.out.find("violation_probability=1/10") != std::string::npos);
  }
  SECTION("machine output is stable across runs") {
    auto a = run_cli({"solve-frac", fixture_path("example6.cf"), "--format",
                      "machine"});
    auto b = run_cli({"solve-frac", fixture_path("example6.cf"), "--format",
                      "machine"});
    REQUIRE(a.out == b.out);
  }
  SECTION("errors surface as exit code 1") {
    auto r = run_cli({"frobnicate", fixture_path("example3.cf")});
    REQUIRE(r.code == cli::exit_error);
    auto missing = run_cli({"solve-frac", "/nonexistent/file.cf"});
    REQUIRE(missing.code == cli::exit_error);
  }
}
