#pragma once

// Replayable counterexamples. A witness pins the script, the engine and the
// delivery order(s) that produced a bad outcome, together with the outcome
// itself; replaying it must reproduce the same classification.

#include <optional>
#include <string>
#include <vector>

#include "coedit/serialize.hpp"
#include "coedit/sim.hpp"

namespace coedit {

enum class WitnessKind { divergence, interleaving, order_violation };

inline const char* to_string(WitnessKind k) {
  switch (k) {
    case WitnessKind::divergence: return "divergence";
    case WitnessKind::interleaving: return "interleaving";
    case WitnessKind::order_violation: return "order-violation";
  }
  return "?";
}

inline WitnessKind parse_witness_kind(const std::string& s) {
  if (s == "divergence") return WitnessKind::divergence;
  if (s == "interleaving") return WitnessKind::interleaving;
  if (s == "order-violation") return WitnessKind::order_violation;
  throw ConfigError("unknown witness classification '" + s + "'");
}

// A concurrent script replays through exhaustive enumeration (ot-server
// orders are indexed by server arrival order); a timed script replays
// through the simulator.
struct Witness {
  WitnessKind kind = WitnessKind::divergence;
  EngineConfig engine;
  DeliveryPolicy policy = DeliveryPolicy::causal_order;
  std::optional<ConcurrentScript> concurrent;
  std::optional<ScenarioScript> timed;
  // Per-site delivery order as (origin, seq) lists; for ot-server, site 0
  // holds the server arrival order.
  std::vector<std::vector<std::pair<SiteId, std::uint64_t>>> orders;
  std::vector<Text> texts;
  std::string note;
};

inline json to_json_concurrent(const ConcurrentScript& s) {
  json ops = json::array();
  for (const auto& [site, in] : s.ops) ops.push_back(ScriptEvent{0, site, in});
  for (auto& o : ops) o.erase("time");
  return {{"m", s.m}, {"initial", to_utf8(s.initial)}, {"ops", ops}};
}

inline ConcurrentScript concurrent_from_json(const json& j) {
  ConcurrentScript s;
  s.m = j.at("m");
  s.initial = from_utf8(j.value("initial", std::string()));
  for (const auto& o : j.at("ops")) {
    auto e = o.get<ScriptEvent>();
    s.ops.emplace_back(e.site, e.intent);
  }
  return s;
}

inline void to_json(json& j, const Witness& w) {
  j = {{"classification", to_string(w.kind)}, {"engine", w.engine}, {"policy", to_string(w.policy)}};
  if (w.concurrent) j["concurrent_script"] = to_json_concurrent(*w.concurrent);
  if (w.timed) j["scenario"] = *w.timed;
  j["orders"] = json::array();
  for (const auto& order : w.orders) {
    json o = json::array();
    for (auto [site, seq] : order) o.push_back({site, seq});
    j["orders"].push_back(o);
  }
  j["texts"] = json::array();
  for (const auto& t : w.texts) j["texts"].push_back(to_utf8(t));
  if (!w.note.empty()) j["note"] = w.note;
}

inline void from_json(const json& j, Witness& w) {
  w = {};
  w.kind = parse_witness_kind(j.at("classification"));
  w.engine = j.at("engine").get<EngineConfig>();
  w.policy = parse_policy(j.value("policy", std::string("causal-order")));
  if (j.contains("concurrent_script")) w.concurrent = concurrent_from_json(j.at("concurrent_script"));
  if (j.contains("scenario")) w.timed = j.at("scenario").get<ScenarioScript>();
  for (const auto& o : j.value("orders", json::array())) {
    std::vector<std::pair<SiteId, std::uint64_t>> order;
    for (const auto& p : o) order.emplace_back(p.at(0), p.at(1));
    w.orders.push_back(std::move(order));
  }
  for (const auto& t : j.value("texts", json::array())) w.texts.push_back(from_utf8(t.get<std::string>()));
  w.note = j.value("note", std::string());
}

}  // namespace coedit
