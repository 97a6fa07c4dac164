#pragma once

// JSON forms of operations, wire ops, scenario scripts and results.
// Text is always UTF-8 on the outside.

#include "json.hpp"  // vendored nlohmann::json
#include <string>

#include "coedit/sim.hpp"

namespace coedit {

using json = nlohmann::json;

// --- small enums -----------------------------------------------------------

inline Topology parse_topology(const std::string& s) {
  if (s == "star-server") return Topology::star_server;
  if (s == "full-mesh") return Topology::full_mesh;
  throw ConfigError("unknown topology '" + s + "'");
}

inline DeliveryPolicy parse_policy(const std::string& s) {
  if (s == "causal-order") return DeliveryPolicy::causal_order;
  if (s == "woot-precondition") return DeliveryPolicy::woot_precondition;
  if (s == "random-order") return DeliveryPolicy::random_order;
  throw ConfigError("unknown delivery policy '" + s + "'");
}

inline TieBreakPolicy parse_tie(const std::string& s) {
  if (s == "site-order") return TieBreakPolicy::site_order;
  if (s == "naive-left") return TieBreakPolicy::naive_left;
  throw ConfigError("unknown tie-break policy '" + s + "'");
}

inline AllocStrategy parse_alloc(const std::string& s) {
  if (s == "boundary") return AllocStrategy::boundary;
  if (s == "random") return AllocStrategy::random;
  throw ConfigError("unknown allocation strategy '" + s + "'");
}

// --- core ------------------------------------------------------------------

inline void to_json(json& j, const VectorClock& c) {
  j = json::object();
  for (auto [s, v] : c.entries()) j[std::to_string(s)] = v;
}

inline void from_json(const json& j, VectorClock& c) {
  c = {};
  for (auto it = j.begin(); it != j.end(); ++it) c.set(static_cast<SiteId>(std::stoul(it.key())), it.value());
}

inline void to_json(json& j, const EditOp& op) {
  if (op.is_insert())
    j = {{"kind", "insert"}, {"pos", op.pos}, {"content", to_utf8(op.content)}};
  else
    j = {{"kind", "delete"}, {"pos", op.pos}, {"length", op.length}};
  j["site"] = op.site;
  j["seq"] = op.seq;
}

inline void from_json(const json& j, EditOp& op) {
  std::string kind = j.at("kind");
  SiteId site = j.value("site", SiteId{0});
  std::uint64_t seq = j.value("seq", std::uint64_t{0});
  if (kind == "insert")
    op = EditOp::ins(j.at("pos"), from_utf8(j.at("content").get<std::string>()), site, seq);
  else if (kind == "delete")
    op = EditOp::del(j.at("pos"), j.at("length"), site, seq);
  else
    throw ConfigError("unknown op kind '" + kind + "'");
}

// --- engine wire ops -------------------------------------------------------

inline void to_json(json& j, const OTWireOp& w) {
  j = {{"ops", w.ops}, {"site", w.site}, {"seq", w.seq}, {"clock", w.clock}, {"revision", w.revision}};
}

inline void from_json(const json& j, OTWireOp& w) {
  w.ops = j.at("ops").get<OpList>();
  w.site = j.at("site");
  w.seq = j.value("seq", std::uint64_t{0});
  w.clock = j.value("clock", VectorClock{});
  w.revision = j.value("revision", std::uint64_t{0});
}

inline void to_json(json& j, const WId& id) { j = json::array({id.site, id.clock}); }
inline void from_json(const json& j, WId& id) { id = {j.at(0), j.at(1)}; }

inline void to_json(json& j, const WootWireOp& w) {
  if (w.kind == WootWireOp::Kind::insert)
    j = {{"kind", "insert"},
         {"id", w.ch.id},
         {"char", to_utf8(Text(1, w.ch.ch))},
         {"prev", w.ch.prev},
         {"next", w.ch.next}};
  else
    j = {{"kind", "delete"}, {"target", w.target}};
  j["site"] = w.site;
  j["clock"] = w.clock;
}

inline void from_json(const json& j, WootWireOp& w) {
  w = {};
  if (j.at("kind") == "insert") {
    w.kind = WootWireOp::Kind::insert;
    Text ch = from_utf8(j.at("char").get<std::string>());
    if (ch.size() != 1) throw ConfigError("woot insert must carry exactly one character");
    w.ch = WChar{j.at("id").get<WId>(), ch[0], true, j.at("prev").get<WId>(), j.at("next").get<WId>()};
  } else {
    w.kind = WootWireOp::Kind::del;
    w.target = j.at("target").get<WId>();
  }
  w.site = j.at("site");
  w.clock = j.value("clock", VectorClock{});
}

inline void to_json(json& j, const LogootId& id) {
  j = json::array();
  for (const auto& t : id.path) j.push_back({t.digit, t.site, t.clock});
}

inline void from_json(const json& j, LogootId& id) {
  id.path.clear();
  for (const auto& t : j) id.path.push_back({t.at(0), t.at(1), t.at(2)});
}

inline void to_json(json& j, const LogootWireOp& w) {
  j = {{"kind", w.kind == LogootWireOp::Kind::insert ? "insert" : "delete"}, {"id", w.id}};
  if (w.kind == LogootWireOp::Kind::insert) j["char"] = to_utf8(Text(1, w.ch));
  j["site"] = w.site;
  j["clock"] = w.clock;
}

inline void from_json(const json& j, LogootWireOp& w) {
  w = {};
  w.kind = j.at("kind") == "insert" ? LogootWireOp::Kind::insert : LogootWireOp::Kind::del;
  w.id = j.at("id").get<LogootId>();
  if (w.kind == LogootWireOp::Kind::insert) {
    Text ch = from_utf8(j.at("char").get<std::string>());
    if (ch.size() != 1) throw ConfigError("logoot insert must carry exactly one character");
    w.ch = ch[0];
  }
  w.site = j.at("site");
  w.clock = j.value("clock", VectorClock{});
}

inline void to_json(json& j, const WireOp& w) {
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        j = p;
        if constexpr (std::is_same_v<P, OTWireOp>) j["engine"] = "ot";
        if constexpr (std::is_same_v<P, WootWireOp>) j["engine"] = "woot";
        if constexpr (std::is_same_v<P, LogootWireOp>) j["engine"] = "logoot";
      },
      w.payload);
}

inline void from_json(const json& j, WireOp& w) {
  std::string engine = j.at("engine");
  if (engine == "ot")
    w.payload = j.get<OTWireOp>();
  else if (engine == "woot")
    w.payload = j.get<WootWireOp>();
  else if (engine == "logoot")
    w.payload = j.get<LogootWireOp>();
  else
    throw ConfigError("unknown wire engine '" + engine + "'");
}

// --- configuration and scenarios ------------------------------------------

inline void to_json(json& j, const EngineConfig& c) {
  j = {{"engine", to_string(c.kind)}, {"tie", to_string(c.tie)}, {"alloc", to_string(c.alloc)}, {"seed", c.seed}};
}

inline void from_json(const json& j, EngineConfig& c) {
  c = {};
  c.kind = parse_engine(j.at("engine"));
  if (j.contains("tie")) c.tie = parse_tie(j.at("tie"));
  if (j.contains("alloc")) c.alloc = parse_alloc(j.at("alloc"));
  c.seed = j.value("seed", std::uint64_t{0});
}

inline void to_json(json& j, const LatencyModel& m) {
  if (m.kind == LatencyModel::Kind::fixed)
    j = {{"kind", "fixed"}, {"delay", m.lo}};
  else
    j = {{"kind", "uniform"}, {"min", m.lo}, {"max", m.hi}};
}

inline void from_json(const json& j, LatencyModel& m) {
  std::string kind = j.at("kind");
  if (kind == "fixed") {
    m = LatencyModel::fixed(j.at("delay"));
  } else if (kind == "uniform") {
    m = LatencyModel::uniform(j.at("min"), j.at("max"));
    if (m.hi < m.lo) throw ConfigError("uniform latency needs min <= max");
  } else {
    throw ConfigError("unknown latency kind '" + kind + "'");
  }
}

inline void to_json(json& j, const ScriptEvent& e) {
  j = {{"time", e.time}, {"site", e.site}, {"pos", e.intent.pos}};
  if (e.intent.kind == EditOp::Kind::insert) {
    j["op"] = "insert";
    j["text"] = to_utf8(e.intent.text);
  } else {
    j["op"] = "delete";
    j["length"] = e.intent.length;
  }
}

inline void from_json(const json& j, ScriptEvent& e) {
  e.time = j.value("time", std::uint64_t{0});
  e.site = j.at("site");
  std::string op = j.at("op");
  if (op == "insert") {
    e.intent = Intent::ins(j.at("pos"), from_utf8(j.at("text").get<std::string>()));
    if (e.intent.text.empty()) throw ConfigError("insert text must not be empty");
  } else if (op == "delete") {
    e.intent = Intent::del(j.at("pos"), j.value("length", std::size_t{1}));
    if (e.intent.length == 0) throw ConfigError("delete length must be positive");
  } else {
    throw ConfigError("unknown event op '" + op + "'");
  }
}

inline void to_json(json& j, const ScenarioScript& s) {
  j = {{"m", s.m},
       {"seed", s.seed},
       {"topology", to_string(s.topology)},
       {"policy", to_string(s.policy)},
       {"latency", s.latency},
       {"initial", to_utf8(s.initial)},
       {"events", s.events}};
}

inline void from_json(const json& j, ScenarioScript& s) {
  s = {};
  s.m = j.at("m");
  s.seed = j.value("seed", std::uint64_t{0});
  s.topology = parse_topology(j.value("topology", std::string("full-mesh")));
  s.policy = parse_policy(j.value("policy", std::string("causal-order")));
  if (j.contains("latency")) s.latency = j.at("latency").get<LatencyModel>();
  s.initial = from_utf8(j.value("initial", std::string()));
  s.events = j.value("events", std::vector<ScriptEvent>{});
}

inline void to_json(json& j, const TraceEvent& e) {
  j = {{"t", e.time}, {"kind", to_string(e.kind)}, {"site", e.site}, {"origin", e.origin}, {"seq", e.seq}};
  if (!e.detail.empty()) j["detail"] = e.detail;
}

inline json result_json(const ScenarioResult& r, bool with_trace = true) {
  auto report = check_convergence(r);
  json j;
  j["engine"] = r.engine;
  j["converged"] = report.converged;
  j["first_difference"] = report.first_difference ? json(*report.first_difference) : json(nullptr);
  j["texts"] = json::array();
  for (const auto& t : r.texts) j["texts"].push_back(to_utf8(t));
  if (r.server_text) j["server_text"] = to_utf8(*r.server_text);
  j["metrics"] = r.metrics;
  j["errors"] = r.errors;
  if (with_trace) j["trace"] = r.trace;
  return j;
}

}  // namespace coedit
