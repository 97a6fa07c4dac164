#pragma once

// Uniform replica contract over the three engine families. A Replica takes
// position-based edits from its user, emits engine wire ops, integrates
// remote wire ops and reports what changed as position-based edits.

#include <concepts>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coedit/core.hpp"
#include "coedit/logoot.hpp"
#include "coedit/ot.hpp"
#include "coedit/woot.hpp"

namespace coedit {

enum class EngineKind {
  ot,         // distributed OT, same algorithm at every site
  ot_server,  // client of a transforming server
  woot,
  logoot,
};

inline const char* to_string(EngineKind k) {
  switch (k) {
    case EngineKind::ot: return "ot";
    case EngineKind::ot_server: return "ot-server";
    case EngineKind::woot: return "woot";
    case EngineKind::logoot: return "logoot";
  }
  return "?";
}

inline EngineKind parse_engine(const std::string& s) {
  if (s == "ot") return EngineKind::ot;
  if (s == "ot-server" || s == "ot_server") return EngineKind::ot_server;
  if (s == "woot") return EngineKind::woot;
  if (s == "logoot") return EngineKind::logoot;
  throw ConfigError("unknown engine '" + s + "'");
}

struct EngineConfig {
  EngineKind kind = EngineKind::ot;
  TieBreakPolicy tie = TieBreakPolicy::site_order;
  AllocStrategy alloc = AllocStrategy::boundary;
  std::uint64_t seed = 0;  // Logoot allocation randomness

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

inline std::string describe(const EngineConfig& c) {
  std::string s = to_string(c.kind);
  if (c.kind == EngineKind::ot || c.kind == EngineKind::ot_server) s += std::string("/") + to_string(c.tie);
  if (c.kind == EngineKind::logoot) s += std::string("/") + to_string(c.alloc);
  return s;
}

struct WireOp {
  std::variant<OTWireOp, WootWireOp, LogootWireOp> payload;

  SiteId site() const {
    return std::visit([](const auto& w) { return w.site; }, payload);
  }
  const VectorClock& clock() const {
    return std::visit([](const auto& w) -> const VectorClock& { return w.clock; }, payload);
  }
  // Per-origin sequence number (vector clock entry of the origin site).
  std::uint64_t seq() const {
    if (auto* ot = std::get_if<OTWireOp>(&payload); ot && ot->clock.entries().empty()) return ot->seq;
    return clock().get(site());
  }

  friend bool operator==(const WireOp&, const WireOp&) = default;
};

template <class R>
concept ReplicaEngine = requires(R r, const R& cr, const EditOp& edit, const WireOp& wire) {
  { r.local(edit) } -> std::same_as<std::vector<WireOp>>;
  { r.remote(wire) } -> std::same_as<OpList>;
  { cr.text() } -> std::convertible_to<Text>;
  { cr.metrics() } -> std::same_as<std::map<std::string, double>>;
};

class Replica {
 public:
  Replica(const EngineConfig& config, SiteId site, std::vector<SiteId> participants = {})
      : config_(config), site_(site), engine_(make(config, site, std::move(participants))) {}

  const EngineConfig& config() const { return config_; }
  SiteId site() const { return site_; }

  void seed(const Text& text) {
    std::visit([&](auto& e) { e.seed(text); }, engine_);
  }

  // Applies a user edit and returns the wire ops to propagate. CRDT engines
  // split strings into left-to-right character ops.
  std::vector<WireOp> local(const EditOp& edit) {
    std::vector<WireOp> out;
    if (edit.is_noop()) return out;
    if (auto* ot = std::get_if<OTReplica>(&engine_)) {
      out.push_back(WireOp{ot->local(edit)});
    } else if (auto* client = std::get_if<OTClient>(&engine_)) {
      if (auto w = client->local(edit)) out.push_back(WireOp{*w});
    } else if (auto* woot = std::get_if<WootReplica>(&engine_)) {
      check_crdt_range(edit, woot->metrics_counts().visible);
      if (edit.is_insert())
        for (std::size_t i = 0; i < edit.content.size(); ++i)
          out.push_back(WireOp{woot->gen_insert(edit.pos + i, edit.content[i])});
      else
        for (std::size_t i = 0; i < edit.length; ++i) out.push_back(WireOp{woot->gen_delete(edit.pos)});
    } else {
      auto& logoot = std::get<LogootReplica>(engine_);
      check_crdt_range(edit, logoot.sequence().size());
      if (edit.is_insert())
        for (std::size_t i = 0; i < edit.content.size(); ++i)
          out.push_back(WireOp{logoot.gen_insert(edit.pos + i, edit.content[i])});
      else
        for (std::size_t i = 0; i < edit.length; ++i) out.push_back(WireOp{logoot.gen_delete(edit.pos)});
    }
    return out;
  }

  OpList remote(const WireOp& wire) {
    return std::visit(
        [&](auto& e) -> OpList {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, OTReplica>) {
            return e.remote(std::get<OTWireOp>(wire.payload));
          } else if constexpr (std::is_same_v<E, OTClient>) {
            return e.receive(std::get<OTWireOp>(wire.payload));
          } else if constexpr (std::is_same_v<E, WootReplica>) {
            return e.integrate(std::get<WootWireOp>(wire.payload));
          } else {
            return e.integrate(std::get<LogootWireOp>(wire.payload));
          }
        },
        engine_);
  }

  // Messages released by an incoming message (server-mode acks).
  std::vector<WireOp> take_outbox() {
    std::vector<WireOp> out;
    if (auto* client = std::get_if<OTClient>(&engine_))
      for (auto& w : client->take_outbox()) out.push_back(WireOp{std::move(w)});
    return out;
  }

  const VectorClock& delivered() const {
    static const VectorClock empty;
    return std::visit(
        [](const auto& e) -> const VectorClock& {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, OTClient>)
            return empty;
          else
            return e.delivered();
        },
        engine_);
  }

  bool causally_ready(const WireOp& wire) const {
    if (std::holds_alternative<OTClient>(engine_)) return true;  // server link is FIFO
    return coedit::causally_ready(wire.clock(), wire.site(), delivered());
  }

  // WOOT's own execution condition; other engines fall back to causality.
  bool executable(const WireOp& wire) const {
    if (auto* woot = std::get_if<WootReplica>(&engine_)) return woot->is_executable(std::get<WootWireOp>(wire.payload));
    return causally_ready(wire);
  }

  Text text() const {
    return std::visit([](const auto& e) -> Text { return e.text(); }, engine_);
  }

  std::map<std::string, double> metrics() const {
    std::map<std::string, double> m;
    if (auto* ot = std::get_if<OTReplica>(&engine_)) return ot->metrics();
    if (auto* client = std::get_if<OTClient>(&engine_)) {
      m["C"] = static_cast<double>(client->text().size());
      m["transform_calls"] = static_cast<double>(client->transform_calls());
      m["revision"] = static_cast<double>(client->revision());
      return m;
    }
    if (auto* woot = std::get_if<WootReplica>(&engine_)) {
      auto counts = woot->metrics_counts();
      m["C"] = static_cast<double>(counts.visible);
      m["C_t"] = static_cast<double>(counts.total);
      m["inserts"] = static_cast<double>(woot->inserts_integrated());
      m["deleted_ids"] = static_cast<double>(woot->deleted_ids());
      m["visits"] = static_cast<double>(woot->stats().visits);
      m["check_visits"] = static_cast<double>(woot->stats().check_visits);
      return m;
    }
    const auto& logoot = std::get<LogootReplica>(engine_);
    auto counts = logoot.metrics_counts();
    m["C"] = static_cast<double>(counts.visible);
    m["triples"] = static_cast<double>(counts.triples);
    m["max_depth"] = static_cast<double>(counts.max_depth);
    m["comparisons"] = static_cast<double>(logoot.stats().comparisons);
    return m;
  }

  // Canonical dump of the replica's internal order: element ids and
  // visibility for CRDTs, the text for OT. Equal fingerprints mean the
  // replicas agree on more than the visible text.
  std::string fingerprint() const {
    std::string out;
    if (auto* woot = std::get_if<WootReplica>(&engine_)) {
      for (const auto& c : woot->sequence())
        out += std::to_string(c.id.site) + ":" + std::to_string(c.id.clock) + (c.visible ? "+" : "-") + " ";
      return out;
    }
    if (auto* logoot = std::get_if<LogootReplica>(&engine_)) {
      for (const auto& e : logoot->sequence()) {
        for (const auto& t : e.id.path)
          out += std::to_string(t.digit) + "." + std::to_string(t.site) + "." + std::to_string(t.clock) + "/";
        out += " ";
      }
      return out;
    }
    return to_utf8(text());
  }

  // Direct access for engine-specific inspection.
  template <class E>
  const E* as() const {
    return std::get_if<E>(&engine_);
  }
  template <class E>
  E* as() {
    return std::get_if<E>(&engine_);
  }

  // Re-labels a cloned CRDT replica so it can generate ops for a new site.
  void rebind_site(SiteId site) {
    site_ = site;
    if (auto* w = std::get_if<WootReplica>(&engine_)) w->set_site(site);
    else if (auto* l = std::get_if<LogootReplica>(&engine_)) l->set_site(site);
    else throw ConfigError("only CRDT replicas can be re-bound to another site");
  }

 private:
  using Engine = std::variant<OTReplica, OTClient, WootReplica, LogootReplica>;

  static Engine make(const EngineConfig& c, SiteId site, std::vector<SiteId> participants) {
    switch (c.kind) {
      case EngineKind::ot: return OTReplica(site, c.tie, std::move(participants));
      case EngineKind::ot_server: return OTClient(site, c.tie);
      case EngineKind::woot: return WootReplica(site);
      case EngineKind::logoot: return LogootReplica(site, c.alloc, c.seed);
    }
    throw ConfigError("bad engine kind");
  }

  static void check_crdt_range(const EditOp& edit, std::size_t visible) {
    if (edit.is_insert() ? edit.pos > visible : edit.pos + edit.length > visible)
      throw RangeError("edit outside visible text");
  }

  EngineConfig config_;
  SiteId site_;
  Engine engine_;
};

static_assert(ReplicaEngine<Replica>);

}  // namespace coedit
