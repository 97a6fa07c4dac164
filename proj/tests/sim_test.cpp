#include <gtest/gtest.h>

#include <set>

#include "coedit/sim.hpp"
#include "support.hpp"

using namespace coedit;
using coedit::testing::S;
using coedit::testing::T;

namespace {

const std::vector<EngineConfig> kEngines = {
    {EngineKind::ot, TieBreakPolicy::site_order, AllocStrategy::boundary, 0},
    {EngineKind::woot, TieBreakPolicy::site_order, AllocStrategy::boundary, 0},
    {EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::boundary, 0},
    {EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::random, 3},
};

ScenarioScript typing_script(std::uint64_t seed, std::uint64_t latency_hi) {
  ScenarioScript s;
  s.m = 3;
  s.seed = seed;
  s.latency = LatencyModel::uniform(1, latency_hi);
  s.initial = T("hello");
  std::uint64_t t = 0;
  for (int k = 0; k < 30; ++k) {
    SiteId site = 1 + k % 3;
    Intent in = k % 4 == 3 ? Intent::del(k % 7) : Intent::ins(k % 9, T(k % 2 ? "x" : "yz"));
    s.events.push_back({t, site, in});
    t += k % 3 == 2 ? 2 : 0;
  }
  return s;
}

}  // namespace

TEST(RunScenario, EmptyScriptLeavesEmptyTexts) {
  for (const auto& e : kEngines) {
    ScenarioScript s;
    s.m = 3;
    auto r = run_scenario(s, e);
    ASSERT_EQ(r.texts.size(), 3u);
    for (const auto& t : r.texts) EXPECT_TRUE(t.empty());
    EXPECT_TRUE(check_convergence(r).converged);
  }
}

TEST(RunScenario, SingleSiteTypingReachesEveryone) {
  for (const auto& e : kEngines) {
    ScenarioScript s;
    s.m = 3;
    s.latency = LatencyModel::fixed(5);
    s.events = {{0, 1, Intent::ins(0, T("a"))}, {1, 1, Intent::ins(1, T("b"))}};
    auto r = run_scenario(s, e);
    for (const auto& t : r.texts) EXPECT_EQ(S(t), "ab") << describe(e);
  }
}

TEST(RunScenario, AliceAndBobWithStringOps) {
  ScenarioScript s;
  s.m = 2;
  s.latency = LatencyModel::fixed(10);
  s.events = {{0, 1, Intent::ins(0, T("Alice"))}, {0, 2, Intent::ins(0, T("Bob"))}};
  auto r = run_scenario(s, kEngines[0]);
  EXPECT_EQ(S(r.texts[0]), "AliceBob");
  EXPECT_EQ(S(r.texts[1]), "AliceBob");
}

TEST(RunScenario, ServerModeNeedsStarAndFifo) {
  ScenarioScript s;
  EngineConfig server{EngineKind::ot_server};
  EXPECT_THROW(run_scenario(s, server), ConfigError);
  s.topology = Topology::star_server;
  s.policy = DeliveryPolicy::random_order;
  EXPECT_THROW(run_scenario(s, server), ConfigError);
  s.policy = DeliveryPolicy::causal_order;
  EXPECT_NO_THROW(run_scenario(s, server));
  s.policy = DeliveryPolicy::woot_precondition;
  s.topology = Topology::full_mesh;
  EXPECT_THROW(run_scenario(s, kEngines[0]), ConfigError);
  EXPECT_NO_THROW(run_scenario(s, kEngines[1]));
}

TEST(RunScenario, ConvergesOnEveryTopology) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto base = typing_script(seed, 12);
    for (auto topology : {Topology::full_mesh, Topology::star_server}) {
      base.topology = topology;
      for (const auto& e : kEngines) {
        auto r = run_scenario(base, e);
        auto report = check_convergence(r);
        EXPECT_TRUE(report.converged) << describe(e) << " seed " << seed << " " << S(r.texts[0]) << " vs "
                                      << S(r.texts[1]);
      }
      if (topology == Topology::star_server) {
        auto r = run_scenario(base, {EngineKind::ot_server});
        EXPECT_TRUE(check_convergence(r).converged) << "seed " << seed;
      }
    }
  }
}

TEST(RunScenario, Deterministic) {
  auto script = typing_script(4, 20);
  for (const auto& e : kEngines) {
    auto a = run_scenario(script, e);
    auto b = run_scenario(script, e);
    EXPECT_EQ(a, b);
  }
  auto other = typing_script(5, 20);
  auto a = run_scenario(script, kEngines[1]);
  auto b = run_scenario(other, kEngines[1]);
  EXPECT_NE(a.trace, b.trace);
  EXPECT_TRUE(check_convergence(b).converged);
}

TEST(RunScenario, CausalPolicyNeverAppliesAheadOfPredecessors) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = run_scenario(typing_script(seed, 30), kEngines[0]);
    // Rebuild every op's clock from the trace alone: an op depends on
    // whatever its site had generated or applied before generating it.
    std::map<SiteId, VectorClock> knows;
    std::map<std::pair<SiteId, std::uint64_t>, VectorClock> clock_of;
    std::size_t applies = 0;
    for (const auto& ev : r.trace) {
      if (ev.kind == TraceEvent::Kind::generate) {
        knows[ev.site].tick(ev.site);
        clock_of[{ev.site, ev.seq}] = knows[ev.site];
      } else if (ev.kind == TraceEvent::Kind::apply) {
        const VectorClock& c = clock_of.at({ev.origin, ev.seq});
        VectorClock need = c;
        need.set(ev.origin, ev.seq - 1);
        ASSERT_TRUE(need.dominated_by(knows[ev.site])) << "site " << ev.site << " applied " << ev.origin << "#"
                                                       << ev.seq << " early";
        knows[ev.site].merge(c);
        ++applies;
      }
    }
    EXPECT_GT(applies, 0u);
  }
}

TEST(RunScenario, LatencyOpensAConcurrencyWindow) {
  ScenarioScript s;
  s.m = 2;
  s.events = {{0, 1, Intent::ins(0, T("a"))}, {1, 2, Intent::ins(0, T("b"))}, {2, 1, Intent::ins(0, T("c"))}};
  auto quick = run_scenario(inject_latency(s, LatencyModel::fixed(0)), kEngines[0]);
  auto slow = run_scenario(inject_latency(s, LatencyModel::fixed(50)), kEngines[0]);
  EXPECT_EQ(quick.metrics[0].at("c_observed_max"), 0);
  EXPECT_GT(slow.metrics[0].at("c_observed_max") + slow.metrics[1].at("c_observed_max"), 0);
  EXPECT_TRUE(check_convergence(slow).converged);
}

TEST(RunScenario, WootPreconditionDeliveryDrains) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto script = typing_script(seed, 40);
    script.policy = DeliveryPolicy::woot_precondition;
    auto r = run_scenario(script, kEngines[1]);
    EXPECT_TRUE(check_convergence(r).converged);
    EXPECT_TRUE(r.errors.empty());
  }
}

TEST(RunScenario, RandomOrderFailuresAreRecorded) {
  bool saw_error = false;
  for (std::uint64_t seed = 0; seed < 30 && !saw_error; ++seed) {
    auto script = typing_script(seed, 40);
    script.policy = DeliveryPolicy::random_order;
    auto r = run_scenario(script, kEngines[0]);
    saw_error = !r.errors.empty();
  }
  EXPECT_TRUE(saw_error);
}

TEST(CheckConvergence, Examples) {
  EXPECT_TRUE(check_convergence(std::vector<Text>{T("ab"), T("ab")}).converged);
  auto diff = check_convergence(std::vector<Text>{T("xy"), T("yx")});
  EXPECT_FALSE(diff.converged);
  EXPECT_EQ(diff.first_difference, 0u);
  EXPECT_TRUE(check_convergence(std::vector<Text>{T(""), T("")}).converged);
  EXPECT_EQ(check_convergence(std::vector<Text>{T("abc"), T("abd"), T("ab")}).first_difference, 2u);
}

TEST(EnumerateOrders, Counting) {
  ConcurrentScript two;
  two.m = 4;  // sites 3 and 4 only observe
  two.ops = {{1, Intent::ins(0, T("x"))}, {2, Intent::ins(0, T("y"))}};
  EXPECT_EQ(enumerate_orders(two, kEngines[0]).size(), 4u);

  ConcurrentScript sequential;
  sequential.m = 2;
  sequential.ops = {{1, Intent::ins(0, T("a"))}, {1, Intent::ins(1, T("b"))}};
  EXPECT_EQ(enumerate_orders(sequential, kEngines[0]).size(), 1u);

  ConcurrentScript three;
  three.m = 4;
  three.ops = {{1, Intent::ins(0, T("a"))}, {2, Intent::ins(0, T("b"))}, {3, Intent::ins(0, T("c"))}};
  auto outcomes = enumerate_site_outcomes(three, kEngines[0]);
  EXPECT_EQ(outcomes[3].size(), 6u);
  EXPECT_EQ(outcomes[0].size(), 2u);
  EXPECT_EQ(enumerate_orders(three, kEngines[0]).size(), 2u * 2u * 2u * 6u);

  ConcurrentScript big;
  big.m = 2;
  for (int i = 0; i < 7; ++i) big.ops.push_back({1, Intent::ins(0, T("a"))});
  EXPECT_THROW(enumerate_orders(big, kEngines[0]), SizeError);
}

TEST(EnumerateOrders, AllEnginesConvergeOnConcurrentInserts) {
  ConcurrentScript s;
  s.m = 3;
  s.initial = T("ab");
  s.ops = {{1, Intent::ins(1, T("x"))}, {2, Intent::del(0)}, {3, Intent::ins(1, T("y"))}};
  for (const auto& e : kEngines)
    for (const auto& r : enumerate_orders(s, e)) EXPECT_TRUE(check_convergence(r).converged) << describe(e);
  for (const auto& r : enumerate_orders(s, {EngineKind::ot_server})) {
    EXPECT_TRUE(check_convergence(r).converged);
    EXPECT_EQ(r.texts[0], *r.server_text);
  }
}

TEST(EnumerateOrders, ServerOrdersIncludeBufferedFollowUps) {
  ConcurrentScript s;
  s.m = 2;
  s.ops = {{1, Intent::ins(0, T("a"))}, {1, Intent::ins(1, T("b"))}, {2, Intent::ins(0, T("c"))}};
  auto results = enumerate_orders(s, {EngineKind::ot_server});
  EXPECT_EQ(results.size(), 3u);  // c before, between or after site 1's two messages
  std::set<std::string> finals;
  for (const auto& r : results) {
    EXPECT_TRUE(check_convergence(r).converged);
    finals.insert(S(r.texts[0]));
  }
  EXPECT_EQ(finals, (std::set<std::string>{"abc"}));
}
