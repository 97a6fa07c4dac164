#include <gtest/gtest.h>

#include "coedit/harness/fuzz.hpp"
#include "coedit/serialize.hpp"
#include "support.hpp"

using namespace coedit;
using coedit::testing::T;

namespace {

std::vector<WireOp> sample_wire(const EngineConfig& e) {
  Replica r(e, 3, {3, 4});
  r.seed(T("h\xC3\xA9llo"));
  std::vector<WireOp> out;
  for (const auto& op : {EditOp::ins(2, T("\xF0\x9F\x98\x80z")), EditOp::del(0, 2), EditOp::ins(4, T("q"))}) {
    auto w = r.local(op);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

}  // namespace

TEST(Serialize, WireOpsRoundTripAndIntegrateAlike) {
  for (auto e : {EngineConfig{EngineKind::ot}, EngineConfig{EngineKind::woot}, EngineConfig{EngineKind::logoot},
                 EngineConfig{EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::random, 5}}) {
    Replica direct(e, 4, {3, 4}), decoded(e, 4, {3, 4});
    direct.seed(T("h\xC3\xA9llo"));
    decoded.seed(T("h\xC3\xA9llo"));
    for (const auto& w : sample_wire(e)) {
      json j = w;
      auto back = json::parse(j.dump()).get<WireOp>();
      EXPECT_EQ(back, w) << j.dump();
      EXPECT_EQ(direct.remote(w), decoded.remote(back));
    }
    EXPECT_EQ(direct.text(), decoded.text());
    EXPECT_EQ(direct.fingerprint(), decoded.fingerprint());
  }
}

TEST(Serialize, EditOpShapes) {
  json ins = EditOp::ins(2, T("ab"), 1, 4);
  EXPECT_EQ(ins, json::parse(R"({"kind":"insert","pos":2,"content":"ab","site":1,"seq":4})"));
  json del = EditOp::del(0, 3);
  EXPECT_EQ(del.at("kind"), "delete");
  EXPECT_EQ(del.at("length"), 3);
  EXPECT_EQ(ins.get<EditOp>(), EditOp::ins(2, T("ab"), 1, 4));
  EXPECT_EQ(del.get<EditOp>(), EditOp::del(0, 3));
}

TEST(Serialize, VectorClockKeysAreSiteStrings) {
  VectorClock c;
  c.set(2, 5);
  c.set(10, 1);
  json j = c;
  EXPECT_EQ(j, json::parse(R"({"2":5,"10":1})"));
  EXPECT_EQ(j.get<VectorClock>(), c);
}

TEST(Serialize, ScenarioRoundTrip) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = random_script(seed, 3, 10, 40);
    s.topology = seed % 2 ? Topology::star_server : Topology::full_mesh;
    s.policy = seed % 3 ? DeliveryPolicy::causal_order : DeliveryPolicy::random_order;
    EXPECT_EQ(json::parse(json(s).dump()).get<ScenarioScript>(), s);
  }
  ScenarioScript fixed;
  fixed.latency = LatencyModel::fixed(7);
  EXPECT_EQ(json(fixed).get<ScenarioScript>(), fixed);
}

TEST(Serialize, ScenarioDefaults) {
  auto s = json::parse(R"({"m":2,"events":[{"site":1,"op":"insert","pos":0,"text":"x"}]})").get<ScenarioScript>();
  EXPECT_EQ(s.topology, Topology::full_mesh);
  EXPECT_EQ(s.policy, DeliveryPolicy::causal_order);
  EXPECT_EQ(s.events.at(0).time, 0u);
  EXPECT_EQ(s.events.at(0).intent, Intent::ins(0, T("x")));
}

TEST(Serialize, RejectsMalformedInput) {
  EXPECT_THROW(json::parse(R"({"engine":"crdt"})").get<EngineConfig>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"kind":"uniform","min":5,"max":1})").get<LatencyModel>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"site":1,"op":"insert","pos":0,"text":""})").get<ScriptEvent>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"site":1,"op":"move","pos":0})").get<ScriptEvent>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"m":2,"topology":"ring"})").get<ScenarioScript>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"engine":"rga","site":1})").get<WireOp>(), ConfigError);
  EXPECT_THROW(json::parse(R"({"m":2})").at("events"), json::out_of_range);
}

TEST(Serialize, ResultJsonCarriesReplayConfig) {
  ScenarioScript s;
  s.m = 2;
  s.events = {{0, 1, Intent::ins(0, T("a"))}};
  auto r = run_scenario(s, {EngineKind::woot});
  json j = result_json(r);
  EXPECT_TRUE(j.at("converged").get<bool>());
  EXPECT_EQ(j.at("engine").get<EngineConfig>(), EngineConfig{EngineKind::woot});
  EXPECT_EQ(j.at("texts"), json::parse(R"(["a","a"])"));
  EXPECT_FALSE(j.at("trace").empty());
  EXPECT_FALSE(result_json(r, false).contains("trace"));
}
