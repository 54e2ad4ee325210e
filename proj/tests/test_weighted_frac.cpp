#include <catch2/catch_amalgamated.hpp>

#include "oracle.hpp"
#include "testutil.hpp"

using namespace congestfair;
using testutil::load_fixture;

namespace {

SemiStochasticMatrix lottery_matrix(const Problem& p, const Lottery& lottery) {
  auto m = SemiStochasticMatrix::zero(p.agent_count(), p.post_count());
  for (const auto& e : lottery.entries)
    for (int i = 0; i < p.agent_count(); ++i)
      m.at(i, e.assignment.post_of[i]) += e.probability;
  return m;
}

}  // namespace

TEST_CASE("weighted fractional solutions") {
  SECTION("three-agent two-post instance") {
    Problem p = load_fixture("example7.cf");
    auto sol = solve_weighted_competitive(p);
    REQUIRE(sol.sigma.load == std::vector<Rational>{Rational(11), Rational(10)});
    REQUIRE(sol.demands[p.agent_index("alpha")].posts ==
            std::vector<int>{0, 1});
    REQUIRE(sol.demands[p.agent_index("beta")].posts ==
            std::vector<int>{0, 1});
    REQUIRE(sol.demands[p.agent_index("gamma")].posts == std::vector<int>{1});
    // post b carries exactly the heavy agents' weight, so the strict
    // crowding margin fails there
    REQUIRE_FALSE(sol.f_crowded);
    REQUIRE(oracle::is_competitive_profile(p, sol.sigma.load));
  }
  SECTION("a single agent sits on a best post") {
    std::vector<AgentSpec> agents(1);
    agents[0].label = "solo";
    agents[0].weight = 3;
    PiecewiseUtility u;  // degenerate domain [3, 3]
    u.per_post.push_back({{Rational(3), Rational(5)}});
    u.per_post.push_back({{Rational(3), Rational(1)}});
    agents[0].preference = Preference::piecewise(u);
    Problem p(CongestionModel::weighted, {"a", "b"}, std::move(agents));
    auto sol = solve_weighted_competitive(p);
    REQUIRE(sol.sigma.load == std::vector<Rational>{Rational(3), Rational(0)});
    REQUIRE(sol.matrix.at(0, 0) == 1);
  }
  SECTION("unit weights reproduce the anonymous solver exactly") {
    Problem p = load_fixture("example3.cf");
    auto anon = solve_fractional_competitive(p);
    auto weighted = solve_weighted_competitive(testutil::as_weighted_unit(p));
    REQUIRE(anon.sigma.load == weighted.sigma.load);
    auto rng = testutil::make_rng(103);
    for (int round = 0; round < 15; ++round) {
      std::uniform_int_distribution<int> npick(2, 5), mpick(2, 3);
      Problem q = testutil::random_anonymous(rng, npick(rng), mpick(rng));
      auto a = solve_fractional_competitive(q);
      auto w = solve_weighted_competitive(testutil::as_weighted_unit(q));
      REQUIRE(a.sigma.load == w.sigma.load);
    }
  }
  SECTION("definitional check on random weighted instances") {
    auto rng = testutil::make_rng(107);
    for (int round = 0; round < 30; ++round) {
      std::uniform_int_distribution<int> npick(2, 6), mpick(2, 3);
      Problem p = testutil::random_weighted(rng, npick(rng), mpick(rng));
      auto sol = solve_weighted_competitive(p);
      REQUIRE(oracle::is_competitive_profile(p, sol.sigma.load));
    }
  }
  SECTION("f-crowded solutions are unique per the oracle") {
    auto rng = testutil::make_rng(109);
    int crowded_seen = 0;
    for (int round = 0; round < 40; ++round) {
      std::uniform_int_distribution<int> npick(2, 4);
      Problem p = testutil::random_weighted(rng, npick(rng), 2);
      auto sol = solve_weighted_competitive(p);
      if (!sol.f_crowded) continue;
      ++crowded_seen;
      auto all = oracle::competitive_profiles(p);
      for (const auto& sigma : all) {
        // other f-crowded profiles must coincide
        bool crowded = true;
        for (int a = 0; a < p.post_count() && crowded; ++a) {
          if (sigma[a] == 0) continue;
          for (int i = 0; i < p.agent_count(); ++i) {
            auto d = oracle::demand_by_definition(p, sigma, i);
            if (std::find(d.begin(), d.end(), a) != d.end() &&
                !(sigma[a] > p.weight(i)))
              crowded = false;
          }
        }
        if (crowded) REQUIRE(sigma == sol.sigma.load);
      }
    }
    REQUIRE(crowded_seen > 0);
  }
}

TEST_CASE("support-constrained mixtures of deterministic matrices") {
  SECTION("a valid lottery for the three-agent instance") {
    Problem p = load_fixture("example7.cf");
    auto sol = solve_weighted_competitive(p);
    Lottery lot = birkhoff_decompose(p, sol);
    REQUIRE(lot.total_probability() == 1);
    REQUIRE(expected_congestion(p, lot) == sol.sigma.load);
    for (const auto& e : lot.entries)
      for (int i = 0; i < p.agent_count(); ++i)
        REQUIRE(sol.demands[i].contains(e.assignment.post_of[i]));
  }
  SECTION("a deterministic matrix yields a single entry") {
    Problem p = load_fixture("example7.cf");
    auto sol = solve_weighted_competitive(p);
    WeightedCompetitiveSolution det = sol;
    det.sigma.load = {Rational(20), Rational(1)};
    auto pi = SemiStochasticMatrix::zero(3, 2);
    pi.at(0, 0) = 1;
    pi.at(1, 0) = 1;
    pi.at(2, 1) = 1;
    det.matrix = pi;
    Lottery lot = birkhoff_decompose(p, det);
    REQUIRE(lot.entries.size() == 1);
    REQUIRE(lot.entries[0].probability == 1);
  }
  SECTION("exact matrix reconstruction on random instances") {
    auto rng = testutil::make_rng(113);
    for (int round = 0; round < 30; ++round) {
      std::uniform_int_distribution<int> npick(2, 5), mpick(2, 3);
      Problem p = testutil::random_weighted(rng, npick(rng), mpick(rng));
      auto sol = solve_weighted_competitive(p);
      Lottery lot = birkhoff_decompose(p, sol);
      auto back = lottery_matrix(p, lot);
      REQUIRE(back.p == sol.matrix.p);
      REQUIRE(expected_congestion(p, lot) == sol.sigma.load);
    }
  }
  SECTION("variants reconstruct the same matrix") {
    Problem p = load_fixture("example7.cf");
    auto sol = solve_weighted_competitive(p);
    auto variants = birkhoff_variants(p, sol, 3);
    REQUIRE_FALSE(variants.empty());
    for (const auto& lot : variants)
      REQUIRE(lottery_matrix(p, lot).p == sol.matrix.p);
  }
}

TEST_CASE("lottery fairness audits") {
  Problem p = load_fixture("example7.cf");
  auto profile = effective_prefix_profile(p);
  SECTION("the four-entry mixture violates half the time, gently") {
    Lottery l1 = parse_lottery(p, read_file(testutil::fixture_path(
                                       "example7_l1.cfl")));
    // this reference mixture balances the posts rather than hitting the
    // competitive profile; its value here is the fairness audit
    REQUIRE(expected_congestion(p, l1) ==
            std::vector<Rational>{Rational(21, 2), Rational(21, 2)});
    auto rep = lottery_fairness_report(p, profile, l1);
    REQUIRE(rep.violation_probability == Rational(1, 2));
    for (const auto& e : rep.entries)
      if (!e.fair) REQUIRE(e.worst_margin == Rational(2));
  }
  SECTION("the three-entry mixture violates rarely but badly") {
    Lottery l2 = parse_lottery(p, read_file(testutil::fixture_path(
                                       "example7_l2.cfl")));
    REQUIRE(expected_congestion(p, l2) ==
            std::vector<Rational>{Rational(11), Rational(10)});
    auto rep = lottery_fairness_report(p, profile, l2);
    REQUIRE(rep.violation_probability == Rational(1, 10));
    Rational worst = 0;
    for (const auto& e : rep.entries)
      if (!e.fair) worst = rational_max(worst, e.worst_margin);
    REQUIRE(worst == Rational(4));
  }
  SECTION("a lottery over fair assignments reports zero violation") {
    Lottery fair;
    fair.entries.push_back({Assignment{{0, 1, 1}}, Rational(1, 2)});
    fair.entries.push_back({Assignment{{1, 0, 1}}, Rational(1, 2)});
    auto rep = lottery_fairness_report(p, profile, fair);
    REQUIRE(rep.violation_probability == 0);
    for (const auto& e : rep.entries) REQUIRE(e.fair);
  }
}
