#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "oracle.hpp"
#include "testutil.hpp"

using namespace congestfair;
using testutil::load_fixture;

namespace {

// Brute-force n-prefix finder: every cap vector summing to n whose induced
// allocation set is weakly preferred to its complement.
std::vector<std::vector<int>> brute_prefixes(const Problem& p, int agent) {
  int n = p.agent_count(), m = p.post_count();
  std::vector<std::vector<int>> found;
  std::vector<int> caps(m, 0);
  auto valid = [&]() {
    // every allocation inside weakly beats every allocation outside
    for (int a = 0; a < m; ++a)
      for (int s = 1; s <= caps[a]; ++s)
        for (int b = 0; b < m; ++b)
          for (int s2 = caps[b] + 1; s2 <= n; ++s2)
            if (p.compare(agent, a, Rational(s), b, Rational(s2)) ==
                Order::worse)
              return false;
    return true;
  };
  auto rec = [&](auto&& self, int a, int left) -> void {
    if (a == m - 1) {
      caps[a] = left;
      if (valid()) found.push_back(caps);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      caps[a] = c;
      self(self, a + 1, left - c);
    }
  };
  rec(rec, 0, n);
  return found;
}

}  // namespace

TEST_CASE("anonymous acceptance caps") {
  SECTION("an agent fixated on one post caps it at n") {
    UtilityTable t;
    t.posts = 3;
    t.slots = 4;
    // post a always beats b and c at any congestion
    for (int s = 1; s <= 4; ++s) t.value.push_back(Rational(100 - s));
    for (int s = 1; s <= 4; ++s) t.value.push_back(Rational(10 - s));
    for (int s = 1; s <= 4; ++s) t.value.push_back(Rational(-s));
    std::vector<AgentSpec> agents(4);
    for (int i = 0; i < 4; ++i) {
      agents[i].label = "a" + std::to_string(i);
      agents[i].preference = Preference::cardinal(t);
    }
    Problem p(CongestionModel::anonymous, {"a", "b", "c"}, std::move(agents));
    auto family = anonymous_prefixes(p, 0);
    REQUIRE(family.count == 1);
    REQUIRE(family.prefixes[0].caps ==
            std::vector<Rational>{Rational(4), Rational(0), Rational(0)});
  }

  SECTION("a congestion minimiser splits caps as evenly as possible") {
    // utility depends only on congestion
    UtilityTable t;
    t.posts = 3;
    t.slots = 5;
    for (int a = 0; a < 3; ++a)
      for (int s = 1; s <= 5; ++s)
        t.value.push_back(Rational(-3 * s) + Rational(a, 10));
    std::vector<AgentSpec> agents(5);
    for (int i = 0; i < 5; ++i) {
      agents[i].label = "a" + std::to_string(i);
      agents[i].preference = Preference::cardinal(t);
    }
    Problem p(CongestionModel::anonymous, {"a", "b", "c"}, std::move(agents));
    auto family = anonymous_prefixes(p, 0);
    for (const auto& prefix : family.prefixes)
      for (const auto& c : prefix.caps) {
        REQUIRE(c >= Rational(5 / 3));
        REQUIRE(c <= Rational((5 + 2) / 3));
      }
  }

  SECTION("indifference across posts: the whole family, pairs within 1") {
    // 2 posts, 3 agents, agent cares only about congestion: the third slot
    // of the prefix can sit at either post
    UtilityTable t;
    t.posts = 2;
    t.slots = 3;
    t.value = {Rational(-1), Rational(-2), Rational(-3),
               Rational(-1), Rational(-2), Rational(-3)};
    std::vector<AgentSpec> agents(3);
    for (int i = 0; i < 3; ++i) {
      agents[i].label = "x" + std::to_string(i);
      agents[i].preference = Preference::cardinal(t);
    }
    Problem p(CongestionModel::anonymous, {"a", "b"}, std::move(agents));
    auto family = anonymous_prefixes(p, 0);
    auto brute = brute_prefixes(p, 0);
    REQUIRE(family.count == 2);
    REQUIRE(family.count == brute.size());
    for (const auto& p1 : family.prefixes)
      for (const auto& p2 : family.prefixes)
        for (std::size_t a = 0; a < p1.caps.size(); ++a) {
          Rational diff = p1.caps[a] - p2.caps[a];
          REQUIRE(diff <= 1);
          REQUIRE(diff >= -1);
        }
  }

  SECTION("family enumeration matches brute force on random instances") {
    auto rng = testutil::make_rng(23);
    for (int round = 0; round < 20; ++round) {
      Problem p = testutil::random_anonymous(rng, 4, 3);
      for (int i = 0; i < p.agent_count(); ++i) {
        auto family = anonymous_prefixes(p, i);
        auto brute = brute_prefixes(p, i);
        REQUIRE(family.count == brute.size());
        std::set<std::vector<Rational>> got;
        for (const auto& prefix : family.prefixes) got.insert(prefix.caps);
        std::set<std::vector<Rational>> want;
        for (const auto& caps : brute)
          want.insert(std::vector<Rational>(caps.begin(), caps.end()));
        REQUIRE(got == want);
      }
    }
  }

  SECTION("tie-heavy families truncate to the canonical prefix") {
    UtilityTable t;
    t.posts = 3;
    t.slots = 2;
    for (int a = 0; a < 3; ++a)
      for (int s = 1; s <= 2; ++s) t.value.push_back(Rational(-s));
    std::vector<AgentSpec> agents(2);
    for (int i = 0; i < 2; ++i) {
      agents[i].label = "a" + std::to_string(i);
      agents[i].preference = Preference::cardinal(t);
    }
    Problem p(CongestionModel::anonymous, {"a", "b", "c"}, std::move(agents));
    auto family = anonymous_prefixes(p, 0, 2);
    REQUIRE(family.truncated);
    REQUIRE(family.count == 3);  // choose 2 of the 3 tied first slots
    REQUIRE(family.prefixes.size() == 1);
    validate_prefix(p, 0, family.prefixes[0]);
  }
}

TEST_CASE("weighted acceptance caps") {
  SECTION("worked two-post instance") {
    Problem p = load_fixture("example4.cf");
    Prefix gamma = weighted_prefix(p, p.agent_index("gamma"));
    REQUIRE(gamma.caps == std::vector<Rational>{Rational(8), Rational(4)});
    Prefix alpha = weighted_prefix(p, p.agent_index("alpha"));
    REQUIRE(alpha.caps == std::vector<Rational>{Rational(10), Rational(6)});
  }
  SECTION("three agents, larger total") {
    Problem p = load_fixture("example7.cf");
    Prefix alpha = weighted_prefix(p, p.agent_index("alpha"));
    REQUIRE(alpha.caps == std::vector<Rational>{Rational(16), Rational(15)});
    Prefix gamma = weighted_prefix(p, p.agent_index("gamma"));
    REQUIRE(gamma.caps == std::vector<Rational>{Rational(9), Rational(13)});
  }
  SECTION("single post: the whole interval is accepted") {
    std::vector<AgentSpec> agents(2);
    agents[0].label = "x";
    agents[0].weight = 2;
    agents[1].label = "y";
    agents[1].weight = 3;
    for (auto& a : agents) {
      PiecewiseUtility u;
      u.per_post.push_back(
          {{a.weight, Rational(0)}, {Rational(5), a.weight - 5}});
      a.preference = Preference::piecewise(u);
    }
    Problem p(CongestionModel::weighted, {"a"}, std::move(agents));
    REQUIRE(weighted_prefix(p, 0).caps == std::vector<Rational>{Rational(5)});
  }
  SECTION("slack utilities recover their own caps") {
    auto rng = testutil::make_rng(31);
    for (int round = 0; round < 30; ++round) {
      Problem p = testutil::random_weighted(rng, 4, 3, /*with_kinks=*/false);
      for (int i = 0; i < p.agent_count(); ++i) {
        Prefix got = weighted_prefix(p, i);
        const auto& declared = *p.declared_caps(i);
        // recovered caps may add marginal posts at exactly w_i; both forms
        // describe the same quantile
        for (int a = 0; a < p.post_count(); ++a) {
          if (declared[a] == 0) {
            bool equivalent =
                got.caps[a] == 0 || got.caps[a] == p.weight(i);
            REQUIRE(equivalent);
          } else {
            REQUIRE(got.caps[a] == declared[a]);
          }
        }
        validate_prefix(p, i, got);
        // accepted region size identity
        Rational size = 0;
        for (int a = 0; a < p.post_count(); ++a)
          if (got.caps[a] > 0) size += got.caps[a] - p.weight(i);
        REQUIRE(size == p.total_weight() - p.weight(i));
      }
    }
  }
}

TEST_CASE("cap profile validation") {
  Problem p3 = load_fixture("example3.cf");
  Prefix bad{{Rational(6), Rational(4), Rational(3)}};  // sums to 13, not 12
  REQUIRE_THROWS_AS(validate_prefix(p3, 0, bad), ValidationError);
  Problem p7 = load_fixture("example7.cf");
  Prefix bad7{{Rational(5), Rational(16)}};  // 5 below w = 10
  REQUIRE_THROWS_AS(validate_prefix(p7, 0, bad7), ValidationError);
}

TEST_CASE("top-fairness predicate") {
  Problem p2 = load_fixture("example2.cf");
  auto profile2 = effective_prefix_profile(p2);
  SECTION("the unique fair assignment passes") {
    Assignment asg = greedy_top_fair(p2, profile2);
    REQUIRE(is_top_fair(p2, profile2, asg));
  }
  SECTION("everyone at one post fails someone's cap") {
    Assignment pile;
    pile.post_of.assign(p2.agent_count(), 0);
    REQUIRE_FALSE(is_top_fair(p2, profile2, pile));
  }
  SECTION("weighted predicate on the two-post instance") {
    Problem p4 = load_fixture("example4.cf");
    auto profile4 = effective_prefix_profile(p4);
    Assignment p1;  // alpha alone at a, beta and gamma at b
    p1.post_of = {0, 1, 1};
    REQUIRE(is_top_fair(p4, profile4, p1));
    Assignment bad;  // everyone at b: 10 > cap 6 for alpha
    bad.post_of = {1, 1, 1};
    REQUIRE_FALSE(is_top_fair(p4, profile4, bad));
  }
}

TEST_CASE("greedy constructions") {
  SECTION("reference instance reaches the unique fair profile") {
    Problem p = load_fixture("example2.cf");
    auto profile = effective_prefix_profile(p);
    Assignment asg = greedy_top_fair(p, profile);
    auto load = congestion_profile(p, asg);
    REQUIRE(load == std::vector<Rational>{Rational(4), Rational(2),
                                          Rational(8), Rational(4)});
  }
  SECTION("single agent lands on an accepting post") {
    UtilityTable t;
    t.posts = 2;
    t.slots = 1;
    t.value = {Rational(1), Rational(0)};
    std::vector<AgentSpec> agents(1);
    agents[0].label = "only";
    agents[0].preference = Preference::cardinal(t);
    Problem p(CongestionModel::anonymous, {"a", "b"}, std::move(agents));
    auto profile = effective_prefix_profile(p);
    Assignment asg = greedy_top_fair(p, profile);
    auto load = congestion_profile(p, asg);
    REQUIRE(load[asg.post_of[0]] == 1);
  }
  SECTION("greedy output is always in the enumerated fair set") {
    Problem p = load_fixture("example3.cf");
    auto profile = effective_prefix_profile(p);
    Assignment asg = greedy_top_fair(p, profile);
    REQUIRE(is_top_fair(p, profile, asg));
    auto set = enumerate_top_fair(p, profile);
    REQUIRE(set.congestion_profiles.count(congestion_profile(p, asg)) == 1);
  }
  SECTION("random anonymous cap profiles never defeat the greedy") {
    auto rng = testutil::make_rng(41);
    for (int round = 0; round < 120; ++round) {
      std::uniform_int_distribution<int> npick(1, 10), mpick(1, 5);
      int n = npick(rng), m = mpick(rng);
      Problem p = testutil::random_anonymous(rng, n, m);
      auto profile = testutil::random_caps(rng, p);
      Assignment asg = greedy_top_fair(p, profile);
      REQUIRE(is_top_fair(p, profile, asg));
    }
  }
  SECTION("random weighted instances never defeat the greedy") {
    auto rng = testutil::make_rng(43);
    for (int round = 0; round < 120; ++round) {
      std::uniform_int_distribution<int> npick(1, 7), mpick(1, 4);
      Problem p = testutil::random_weighted(rng, npick(rng), mpick(rng));
      auto profile = effective_prefix_profile(p);
      Assignment asg = greedy_top_fair(p, profile);
      REQUIRE(is_top_fair(p, profile, asg));
    }
  }
}

TEST_CASE("maximal fair load per post") {
  Problem p2 = load_fixture("example2.cf");
  auto profile2 = effective_prefix_profile(p2);
  SECTION("reference values") {
    REQUIRE(max_fair_load(p2, profile2, 0) == 4);
    REQUIRE(max_fair_load(p2, profile2, 1) == 2);
    REQUIRE(max_fair_load(p2, profile2, 2) == 8);
    REQUIRE(max_fair_load(p2, profile2, 3) == 4);
  }
  SECTION("two posts: the loads split n and pin the unique profile") {
    Problem p1 = load_fixture("example1.cf");
    auto profile = effective_prefix_profile(p1);
    int ka = max_fair_load(p1, profile, 0);
    int kb = max_fair_load(p1, profile, 1);
    REQUIRE(ka == 2);
    REQUIRE(ka + kb == p1.agent_count());
    REQUIRE(has_unique_fair_congestion(p1, profile));
    auto set = enumerate_top_fair(p1, profile);
    REQUIRE(set.congestion_profiles.size() == 1);
    REQUIRE(*set.congestion_profiles.begin() ==
            std::vector<Rational>{Rational(ka), Rational(kb)});
  }
  SECTION("a post nobody accepts fits zero") {
    Problem p = load_fixture("example6.cf");
    PrefixProfile profile(p.agent_count(),
                          Prefix{{Rational(8), Rational(0)}});
    REQUIRE(max_fair_load(p, profile, 1) == 0);
  }
}

TEST_CASE("unique-congestion criterion") {
  SECTION("holds when the maxima add to n") {
    Problem p = load_fixture("example2.cf");
    REQUIRE(has_unique_fair_congestion(p, effective_prefix_profile(p)));
  }
  SECTION("cyclic three-type instance has the single balanced profile") {
    Problem p = load_fixture("example5_1.cf");
    auto profile = effective_prefix_profile(p);
    REQUIRE(has_unique_fair_congestion(p, profile));
    auto set = enumerate_top_fair(p, profile);
    REQUIRE(set.congestion_profiles.size() == 1);
    REQUIRE(*set.congestion_profiles.begin() ==
            std::vector<Rational>{Rational(2), Rational(2), Rational(2)});
  }
  SECTION("fails on the two-type instance with 15 profiles") {
    Problem p = load_fixture("example3.cf");
    REQUIRE_FALSE(has_unique_fair_congestion(p, effective_prefix_profile(p)));
  }
  SECTION("matches enumeration in both directions on random instances") {
    auto rng = testutil::make_rng(47);
    for (int round = 0; round < 60; ++round) {
      std::uniform_int_distribution<int> npick(2, 7), mpick(2, 4);
      int n = npick(rng), m = mpick(rng);
      Problem p = testutil::random_anonymous(rng, n, m);
      auto profile = testutil::random_caps(rng, p);
      auto set = enumerate_top_fair(p, profile);
      REQUIRE(has_unique_fair_congestion(p, profile) ==
              (set.congestion_profiles.size() == 1));
    }
  }
}

TEST_CASE("exhaustive fair enumeration") {
  SECTION("two-type instance: counts against the naive scan") {
    Problem p = load_fixture("example3.cf");
    auto profile = effective_prefix_profile(p);
    auto set = enumerate_top_fair(p, profile);
    // naive definitional scan over all 3^12 assignments
    unsigned long long naive = 0;
    std::set<std::vector<Rational>> naive_profiles;
    for (const auto& asg :
         testutil::all_assignments(p.agent_count(), p.post_count()))
      if (is_top_fair(p, profile, asg)) {
        ++naive;
        naive_profiles.insert(congestion_profile(p, asg));
      }
    REQUIRE(set.assignments.size() == naive);
    REQUIRE(set.assignments.size() == 794);
    REQUIRE(set.congestion_profiles.size() == 15);
    REQUIRE(set.congestion_profiles == naive_profiles);
  }
  SECTION("unique-assignment instance") {
    Problem p = load_fixture("example2.cf");
    auto set = enumerate_top_fair(p, effective_prefix_profile(p));
    REQUIRE(set.assignments.size() == 1);
  }
  SECTION("cyclic instance has exactly ten") {
    Problem p = load_fixture("example5_1.cf");
    auto set = enumerate_top_fair(p, effective_prefix_profile(p));
    REQUIRE(set.assignments.size() == 10);
  }
  SECTION("the limit guard reports the partial count") {
    Problem p = load_fixture("example3.cf");
    auto profile = effective_prefix_profile(p);
    try {
      enumerate_top_fair(p, profile, 100);
      FAIL("expected LimitError");
    } catch (const LimitError& e) {
      REQUIRE(e.partial_count() == 100);
    }
  }
}

TEST_CASE("guarantee tightness witnesses") {
  SECTION("worked two-post witness") {
    auto w = maximality_witness({"a", "b"}, Rational(4), Rational(1),
                                {Rational(3), Rational(2)}, 0,
                                Rational(1, 10));
    REQUIRE(w.problem.agent_count() == 3);
    REQUIRE(w.problem.weight(w.problem.agent_index("guard_a")) ==
            Rational(19, 10));
    REQUIRE(w.problem.weight(w.problem.agent_index("guard_b")) ==
            Rational(11, 10));
    REQUIRE(w.pinned_congestion == Rational(29, 10));
    auto profile = effective_prefix_profile(w.problem);
    auto set = enumerate_top_fair(w.problem, profile);
    REQUIRE_FALSE(set.assignments.empty());
    for (const auto& asg : set.assignments) {
      REQUIRE(asg.post_of[w.target_agent] == w.target_post);
      auto load = congestion_profile(w.problem, asg);
      REQUIRE(load[w.target_post] == w.pinned_congestion);
    }
  }
  SECTION("single accepted post needs no perturbation") {
    auto w = maximality_witness({"a", "b"}, Rational(5), Rational(2),
                                {Rational(5), Rational(0)}, 0, Rational(1, 7));
    REQUIRE(w.problem.agent_count() == 2);
    REQUIRE(w.pinned_congestion == Rational(5));
    REQUIRE(w.problem.weight(1) == Rational(3));
  }
  SECTION("oversized eps is rejected") {
    REQUIRE_THROWS_AS(
        maximality_witness({"a", "b"}, Rational(4), Rational(1),
                           {Rational(3), Rational(2)}, 0, Rational(3)),
        ValidationError);
  }
  SECTION("anonymous analog: identical agents, someone hits the cap") {
    // with one shared cap vector, every fair assignment loads some post to
    // its cap for at least one agent
    Problem p = load_fixture("example5_1.cf");
    std::vector<AgentSpec> agents;
    for (int i = 0; i < 6; ++i) {
      AgentSpec a;
      a.label = "c" + std::to_string(i);
      std::vector<Rational> caps{Rational(3), Rational(2), Rational(1)};
      a.declared_caps = caps;
      a.preference = Preference::cardinal(slack_table(caps, 6));
      agents.push_back(std::move(a));
    }
    Problem q(CongestionModel::anonymous, {"a", "b", "c"}, std::move(agents));
    auto profile = effective_prefix_profile(q);
    auto set = enumerate_top_fair(q, profile);
    for (const auto& asg : set.assignments) {
      auto load = congestion_profile(q, asg);
      bool someone_at_cap = false;
      for (int i = 0; i < q.agent_count(); ++i)
        if (load[asg.post_of[i]] == profile[i].caps[asg.post_of[i]])
          someone_at_cap = true;
      REQUIRE(someone_at_cap);
    }
  }
}
