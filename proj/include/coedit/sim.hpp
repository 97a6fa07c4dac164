#pragma once

// Deterministic discrete-event simulation of a co-editing session.
//
// Sites execute scripted edit intents at integer ticks; every wire op is
// delivered to every other site after a seeded delay. The delivery policy
// decides when a received op may be handed to the engine.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "coedit/replica.hpp"

namespace coedit {

enum class Topology { star_server, full_mesh };
enum class DeliveryPolicy { causal_order, woot_precondition, random_order };

inline const char* to_string(Topology t) { return t == Topology::star_server ? "star-server" : "full-mesh"; }
inline const char* to_string(DeliveryPolicy p) {
  switch (p) {
    case DeliveryPolicy::causal_order: return "causal-order";
    case DeliveryPolicy::woot_precondition: return "woot-precondition";
    case DeliveryPolicy::random_order: return "random-order";
  }
  return "?";
}

// An edit as the user means it; positions are resolved against the site's
// live view when the event fires and clamped into range.
struct Intent {
  EditOp::Kind kind = EditOp::Kind::insert;
  std::size_t pos = 0;
  Text text;               // insert
  std::size_t length = 1;  // delete

  static Intent ins(std::size_t pos, Text text) { return {EditOp::Kind::insert, pos, std::move(text), 0}; }
  static Intent del(std::size_t pos, std::size_t length = 1) { return {EditOp::Kind::del, pos, {}, length}; }

  friend bool operator==(const Intent&, const Intent&) = default;
};

inline std::optional<EditOp> resolve(const Intent& intent, std::size_t view_length) {
  if (intent.kind == EditOp::Kind::insert) {
    if (intent.text.empty()) return std::nullopt;
    return EditOp::ins(std::min(intent.pos, view_length), intent.text);
  }
  if (view_length == 0) return std::nullopt;
  std::size_t pos = std::min(intent.pos, view_length - 1);
  std::size_t len = std::min(std::max<std::size_t>(intent.length, 1), view_length - pos);
  return EditOp::del(pos, len);
}

struct ScriptEvent {
  std::uint64_t time = 0;
  SiteId site = 1;
  Intent intent;

  friend bool operator==(const ScriptEvent&, const ScriptEvent&) = default;
};

struct LatencyModel {
  enum class Kind { fixed, uniform };
  Kind kind = Kind::fixed;
  std::uint64_t lo = 0;  // fixed delay uses lo
  std::uint64_t hi = 0;

  static LatencyModel fixed(std::uint64_t d) { return {Kind::fixed, d, d}; }
  static LatencyModel uniform(std::uint64_t lo, std::uint64_t hi) { return {Kind::uniform, lo, hi}; }

  friend bool operator==(const LatencyModel&, const LatencyModel&) = default;
};

struct ScenarioScript {
  std::uint32_t m = 2;  // number of sites, ids 1..m
  std::uint64_t seed = 0;
  Topology topology = Topology::full_mesh;
  DeliveryPolicy policy = DeliveryPolicy::causal_order;
  LatencyModel latency = LatencyModel::fixed(0);
  Text initial;
  std::vector<ScriptEvent> events;

  friend bool operator==(const ScenarioScript&, const ScenarioScript&) = default;
};

struct TraceEvent {
  enum class Kind { generate, deliver, apply, relay, error };
  std::uint64_t time = 0;
  Kind kind = Kind::generate;
  SiteId site = 0;    // where it happened (0 = server)
  SiteId origin = 0;  // op origin
  std::uint64_t seq = 0;
  std::string detail;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

inline const char* to_string(TraceEvent::Kind k) {
  switch (k) {
    case TraceEvent::Kind::generate: return "generate";
    case TraceEvent::Kind::deliver: return "deliver";
    case TraceEvent::Kind::apply: return "apply";
    case TraceEvent::Kind::relay: return "relay";
    case TraceEvent::Kind::error: return "error";
  }
  return "?";
}

struct ScenarioResult {
  EngineConfig engine;
  std::vector<Text> texts;  // index i holds site i+1
  std::optional<Text> server_text;
  std::vector<TraceEvent> trace;
  std::vector<std::map<std::string, double>> metrics;  // deterministic counters per site
  std::vector<std::string> errors;                     // engine failures, recorded not thrown
  std::vector<double> remote_ns_max;                   // wall clock, excluded from equality

  bool operator==(const ScenarioResult& o) const {
    return engine == o.engine && texts == o.texts && server_text == o.server_text && trace == o.trace &&
           metrics == o.metrics && errors == o.errors;
  }
};

struct ConvergenceReport {
  bool converged = true;
  std::optional<std::size_t> first_difference;  // minimal differing index
  std::vector<Text> texts;
};

inline ConvergenceReport check_convergence(const std::vector<Text>& texts) {
  ConvergenceReport report;
  report.texts = texts;
  if (texts.empty()) return report;
  const Text& ref = texts.front();
  std::optional<std::size_t> diff;
  for (const auto& t : texts) {
    if (t == ref) continue;
    std::size_t i = 0;
    while (i < t.size() && i < ref.size() && t[i] == ref[i]) ++i;
    diff = diff ? std::min(*diff, i) : i;
  }
  report.converged = !diff.has_value();
  report.first_difference = diff;
  return report;
}

inline ConvergenceReport check_convergence(const ScenarioResult& result) {
  std::vector<Text> all = result.texts;
  if (result.server_text) all.push_back(*result.server_text);
  auto report = check_convergence(all);
  if (!result.errors.empty()) report.converged = false;
  return report;
}

inline ScenarioScript inject_latency(ScenarioScript script, const LatencyModel& model) {
  script.latency = model;
  return script;
}

inline void validate(const ScenarioScript& script, const EngineConfig& engine) {
  if (script.m == 0) throw ConfigError("scenario needs at least one site");
  if (script.policy == DeliveryPolicy::woot_precondition && engine.kind != EngineKind::woot)
    throw ConfigError("woot-precondition delivery is only valid with the woot engine");
  if (engine.kind == EngineKind::ot_server) {
    if (script.topology != Topology::star_server) throw ConfigError("ot-server requires the star-server topology");
    if (script.policy != DeliveryPolicy::causal_order) throw ConfigError("ot-server requires causal (FIFO) delivery");
  }
  for (const auto& e : script.events)
    if (e.site < 1 || e.site > script.m) throw ConfigError("event for unknown site " + std::to_string(e.site));
}

// ---------------------------------------------------------------------------

class Simulator {
 public:
  Simulator(const ScenarioScript& script, const EngineConfig& engine) : script_(script), engine_(engine) {
    validate(script_, engine_);
    rng_.seed(script_.seed);
    std::vector<SiteId> participants;
    for (SiteId s = 1; s <= script_.m; ++s) participants.push_back(s);
    EngineConfig per_site = engine_;
    for (SiteId s = 1; s <= script_.m; ++s) {
      sites_.emplace_back(Replica(per_site, s, participants));
      sites_.back().replica.seed(script_.initial);
    }
    if (engine_.kind == EngineKind::ot_server) {
      server_.emplace(engine_.tie);
      server_->seed(script_.initial);
    }
  }

  ScenarioResult run() {
    for (std::size_t i = 0; i < script_.events.size(); ++i) {
      const auto& e = script_.events[i];
      push(Event{e.time, e.site, counter_++, Event::Kind::edit, i, {}});
    }
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      if (ev.kind == Event::Kind::edit)
        on_edit(ev);
      else
        on_arrival(ev);
    }
    ScenarioResult result;
    result.engine = engine_;
    for (SiteId s = 1; s <= script_.m; ++s) {
      auto& site = sites_[s - 1];
      if (!site.pending.empty()) {
        std::ostringstream msg;
        msg << "site " << s << " holds " << site.pending.size() << " undeliverable ops";
        throw DeliveryStall(msg.str());
      }
      result.texts.push_back(site.replica.text());
      auto m = site.replica.metrics();
      m["c_observed_max"] = static_cast<double>(site.c_max);
      m["buffered_max"] = static_cast<double>(site.buffered_max);
      m["remote_ops"] = static_cast<double>(site.remote_ops);
      result.metrics.push_back(std::move(m));
      result.remote_ns_max.push_back(site.remote_ns_max);
    }
    if (server_) result.server_text = server_->text();
    result.trace = std::move(trace_);
    result.errors = std::move(errors_);
    return result;
  }

 private:
  struct Envelope {
    WireOp wire;
    SiteId from = 0;
    SiteId to = 0;
  };
  struct Event {
    enum class Kind { edit, arrival };
    std::uint64_t time;
    SiteId site;
    std::uint64_t order;
    Kind kind;
    std::size_t script_index;
    std::optional<Envelope> envelope;

    // Ties in time break by (site, insertion order).
    bool operator>(const Event& o) const {
      return std::tie(time, site, order) > std::tie(o.time, o.site, o.order);
    }
  };
  struct Site {
    explicit Site(Replica r) : replica(std::move(r)) {}
    Replica replica;
    std::vector<WireOp> pending;
    std::vector<VectorClock> applied_clocks;
    std::uint64_t c_max = 0;
    std::uint64_t buffered_max = 0;
    std::uint64_t remote_ops = 0;
    double remote_ns_max = 0;
    bool failed = false;
  };

  void push(Event e) { queue_.push(std::move(e)); }

  std::uint64_t delay() {
    if (script_.latency.kind == LatencyModel::Kind::fixed) return script_.latency.lo;
    std::uint64_t span = script_.latency.hi >= script_.latency.lo ? script_.latency.hi - script_.latency.lo + 1 : 1;
    return script_.latency.lo + draw(rng_, span);
  }

  bool fifo() const { return script_.policy == DeliveryPolicy::causal_order; }

  void send(WireOp wire, SiteId from, SiteId to) {
    std::uint64_t at = now_ + delay();
    if (fifo()) {
      auto& last = link_clock_[{from, to}];
      at = std::max(at, last);
      last = at;
    }
    push(Event{at, to, counter_++, Event::Kind::arrival, 0, Envelope{std::move(wire), from, to}});
  }

  void broadcast_from_site(const WireOp& wire, SiteId from) {
    if (script_.topology == Topology::star_server) {
      send(wire, from, 0);
      return;
    }
    for (SiteId s = 1; s <= script_.m; ++s)
      if (s != from) send(wire, from, s);
  }

  void on_edit(const Event& ev) {
    auto& site = sites_[ev.site - 1];
    if (site.failed) return;
    const auto& intent = script_.events[ev.script_index].intent;
    auto edit = resolve(intent, site.replica.text().size());
    if (!edit) return;
    std::vector<WireOp> wires;
    try {
      wires = site.replica.local(*edit);
    } catch (const std::exception& ex) {
      fail(ev.site, ex.what());
      return;
    }
    std::ostringstream detail;
    detail << *edit;
    trace_.push_back({now_, TraceEvent::Kind::generate, ev.site, ev.site, wires.empty() ? 0 : wires.front().seq(),
                      detail.str()});
    for (auto& w : wires) {
      site.applied_clocks.push_back(w.clock());
      broadcast_from_site(w, ev.site);
    }
  }

  void on_arrival(const Event& ev) {
    const Envelope& env = *ev.envelope;
    if (env.to == 0) {
      on_server(env);
      return;
    }
    auto& site = sites_[env.to - 1];
    trace_.push_back({now_, TraceEvent::Kind::deliver, env.to, env.wire.site(), env.wire.seq(), {}});
    if (site.failed) return;
    if (engine_.kind == EngineKind::ot_server) {
      apply_remote(env.to, env.wire);
      for (auto& w : site.replica.take_outbox()) send(std::move(w), env.to, 0);
      return;
    }
    site.pending.push_back(env.wire);
    site.buffered_max = std::max<std::uint64_t>(site.buffered_max, site.pending.size());
    drain(env.to);
  }

  void drain(SiteId s) {
    auto& site = sites_[s - 1];
    bool progress = true;
    while (progress && !site.failed) {
      progress = false;
      for (std::size_t i = 0; i < site.pending.size(); ++i) {
        const WireOp& w = site.pending[i];
        bool ready = script_.policy == DeliveryPolicy::random_order ||
                     (script_.policy == DeliveryPolicy::woot_precondition ? site.replica.executable(w)
                                                                          : site.replica.causally_ready(w));
        if (!ready) continue;
        WireOp op = std::move(site.pending[i]);
        site.pending.erase(site.pending.begin() + static_cast<std::ptrdiff_t>(i));
        apply_remote(s, op);
        progress = true;
        break;
      }
    }
  }

  void apply_remote(SiteId s, const WireOp& w) {
    auto& site = sites_[s - 1];
    if (!w.clock().entries().empty()) {
      std::uint64_t c = 0;
      for (const auto& vc : site.applied_clocks)
        if (vc_compare(vc, w.clock()) == CausalOrder::concurrent) ++c;
      site.c_max = std::max(site.c_max, c);
      site.applied_clocks.push_back(w.clock());
    }
    auto t0 = std::chrono::steady_clock::now();
    try {
      site.replica.remote(w);
    } catch (const std::exception& ex) {
      fail(s, ex.what());
      return;
    }
    double ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
    site.remote_ns_max = std::max(site.remote_ns_max, ns);
    ++site.remote_ops;
    trace_.push_back({now_, TraceEvent::Kind::apply, s, w.site(), w.seq(), {}});
  }

  void on_server(const Envelope& env) {
    if (!server_) {
      trace_.push_back({now_, TraceEvent::Kind::relay, 0, env.wire.site(), env.wire.seq(), {}});
      for (SiteId s = 1; s <= script_.m; ++s)
        if (s != env.from) send(env.wire, 0, s);
      return;
    }
    OTWireOp rebased;
    try {
      rebased = server_->integrate(std::get<OTWireOp>(env.wire.payload));
    } catch (const std::exception& ex) {
      errors_.push_back(std::string("server: ") + ex.what());
      return;
    }
    trace_.push_back({now_, TraceEvent::Kind::relay, 0, rebased.site, rebased.revision, {}});
    for (SiteId s = 1; s <= script_.m; ++s) send(WireOp{rebased}, 0, s);
  }

  void fail(SiteId s, const std::string& what) {
    sites_[s - 1].failed = true;
    sites_[s - 1].pending.clear();
    errors_.push_back("site " + std::to_string(s) + ": " + what);
    trace_.push_back({now_, TraceEvent::Kind::error, s, 0, 0, what});
  }

  ScenarioScript script_;
  EngineConfig engine_;
  std::mt19937_64 rng_;
  std::vector<Site> sites_;
  std::optional<OTServer> server_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::map<std::pair<SiteId, SiteId>, std::uint64_t> link_clock_;
  std::vector<TraceEvent> trace_;
  std::vector<std::string> errors_;
  std::uint64_t now_ = 0;
  std::uint64_t counter_ = 0;
};

inline ScenarioResult run_scenario(const ScenarioScript& script, const EngineConfig& engine) {
  return Simulator(script, engine).run();
}

// ---------------------------------------------------------------------------
// Exhaustive delivery-order enumeration.
//
// A concurrent script starts every site from the shared initial text; each
// site executes its own intents first (so ops from different sites are
// pairwise concurrent), then receives the other sites' ops in every order the
// policy admits. Results are independent per site, so outcomes are computed
// per site and combined on demand.

struct ConcurrentScript {
  std::uint32_t m = 2;
  Text initial;
  std::vector<std::pair<SiteId, Intent>> ops;  // per-site order = listed order
};

struct SiteOutcome {
  std::vector<std::pair<SiteId, std::uint64_t>> order;  // (origin, seq) as delivered
  Text text;
  std::string fingerprint;
  std::map<std::string, double> metrics;
  std::optional<std::string> error;
  std::uint64_t buffered_max = 0;
};

// Replicas after each site has executed its own intents, and the wire ops
// each site produced.
struct GeneratedOps {
  std::vector<Replica> replicas;
  std::vector<std::vector<WireOp>> wires;  // index s-1
};

inline GeneratedOps generate_concurrent(const ConcurrentScript& script, const EngineConfig& engine) {
  std::vector<SiteId> participants;
  for (SiteId s = 1; s <= script.m; ++s) participants.push_back(s);
  GeneratedOps g;
  g.wires.resize(script.m);
  for (SiteId s = 1; s <= script.m; ++s) {
    g.replicas.emplace_back(engine, s, participants);
    g.replicas.back().seed(script.initial);
  }
  for (const auto& [s, intent] : script.ops) {
    if (s < 1 || s > script.m) throw ConfigError("op for unknown site " + std::to_string(s));
    auto& r = g.replicas[s - 1];
    auto edit = resolve(intent, r.text().size());
    if (!edit) continue;
    for (auto& w : r.local(*edit)) g.wires[s - 1].push_back(std::move(w));
  }
  return g;
}

inline constexpr std::size_t kMaxEnumeratedOps = 6;

namespace detail {

// Calls `visit` with every permutation of `items` in which items sharing a
// group keep their relative order (or any permutation if !keep_groups).
template <class T, class Fn>
void for_each_order(const std::vector<T>& items, const std::vector<SiteId>& group, bool keep_groups, Fn&& visit) {
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<bool> used(items.size(), false);
  std::vector<std::size_t> cur;
  std::function<void()> rec = [&] {
    if (cur.size() == items.size()) {
      visit(cur);
      return;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (used[i]) continue;
      if (keep_groups) {
        bool earlier_pending = false;
        for (std::size_t j = 0; j < i; ++j)
          if (!used[j] && group[j] == group[i]) earlier_pending = true;
        if (earlier_pending) continue;
      }
      used[i] = true;
      cur.push_back(i);
      rec();
      cur.pop_back();
      used[i] = false;
    }
  };
  rec();
}

}  // namespace detail

// Per-site outcomes for a mesh engine (ot, woot, logoot).
inline std::vector<std::vector<SiteOutcome>> enumerate_site_outcomes(const ConcurrentScript& script,
                                                                     const EngineConfig& engine,
                                                                     DeliveryPolicy policy = DeliveryPolicy::causal_order) {
  if (script.ops.size() > kMaxEnumeratedOps)
    throw SizeError("enumeration is limited to " + std::to_string(kMaxEnumeratedOps) + " ops");
  if (engine.kind == EngineKind::ot_server) throw ConfigError("use enumerate_server_orders for ot-server");
  if (policy == DeliveryPolicy::woot_precondition && engine.kind != EngineKind::woot)
    throw ConfigError("woot-precondition delivery is only valid with the woot engine");

  auto [replicas, generated] = generate_concurrent(script, engine);

  std::vector<std::vector<SiteOutcome>> outcomes(script.m);
  for (SiteId s = 1; s <= script.m; ++s) {
    std::vector<WireOp> incoming;
    std::vector<SiteId> origin;
    for (SiteId t = 1; t <= script.m; ++t) {
      if (t == s) continue;
      for (const auto& w : generated[t - 1]) {
        incoming.push_back(w);
        origin.push_back(t);
      }
    }
    bool keep_groups = policy == DeliveryPolicy::causal_order;
    detail::for_each_order(incoming, origin, keep_groups, [&](const std::vector<std::size_t>& order) {
      Replica r = replicas[s - 1];
      SiteOutcome out;
      std::vector<WireOp> pending;
      try {
        for (std::size_t i : order) {
          out.order.emplace_back(incoming[i].site(), incoming[i].seq());
          if (policy == DeliveryPolicy::random_order) {
            r.remote(incoming[i]);
            continue;
          }
          pending.push_back(incoming[i]);
          out.buffered_max = std::max<std::uint64_t>(out.buffered_max, pending.size());
          bool progress = true;
          while (progress) {
            progress = false;
            for (std::size_t k = 0; k < pending.size(); ++k) {
              bool ready = policy == DeliveryPolicy::woot_precondition ? r.executable(pending[k])
                                                                       : r.causally_ready(pending[k]);
              if (!ready) continue;
              WireOp w = std::move(pending[k]);
              pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(k));
              r.remote(w);
              progress = true;
              break;
            }
          }
        }
        if (!pending.empty()) out.error = "DeliveryStall: " + std::to_string(pending.size()) + " ops never ready";
      } catch (const std::exception& ex) {
        out.error = ex.what();
      }
      out.text = r.text();
      out.fingerprint = r.fingerprint();
      out.metrics = r.metrics();
      outcomes[s - 1].push_back(std::move(out));
    });
  }
  return outcomes;
}

// Server-based OT: enumerates every order in which client messages can reach
// the server. A client with several ops sends the first one and the composed
// remainder after its ack.
inline std::vector<ScenarioResult> enumerate_server_orders(const ConcurrentScript& script, const EngineConfig& engine) {
  if (script.ops.size() > kMaxEnumeratedOps)
    throw SizeError("enumeration is limited to " + std::to_string(kMaxEnumeratedOps) + " ops");
  std::vector<OTClient> base;
  std::vector<std::vector<OTWireOp>> first_msg(script.m);
  for (SiteId s = 1; s <= script.m; ++s) {
    base.emplace_back(s, engine.tie);
    base.back().seed(script.initial);
  }
  std::vector<int> message_count(script.m, 0);
  for (const auto& [s, intent] : script.ops) {
    auto& c = base[s - 1];
    auto edit = resolve(intent, c.text().size());
    if (!edit) continue;
    if (auto w = c.local(*edit)) first_msg[s - 1].push_back(*w);
    message_count[s - 1] = c.awaiting_ack() ? (c.buffered() > 0 ? 2 : 1) : message_count[s - 1];
  }
  std::vector<int> slots;
  std::vector<SiteId> group;
  for (SiteId s = 1; s <= script.m; ++s)
    for (int k = 0; k < message_count[s - 1]; ++k) {
      slots.push_back(static_cast<int>(s));
      group.push_back(s);
    }

  std::vector<ScenarioResult> results;
  detail::for_each_order(slots, group, true, [&](const std::vector<std::size_t>& order) {
    std::vector<OTClient> clients = base;
    OTServer server(engine.tie);
    server.seed(script.initial);
    std::vector<std::size_t> received(script.m, 0);  // log prefix delivered to each client
    std::vector<int> sent(script.m, 0);
    ScenarioResult res;
    res.engine = engine;
    auto deliver_upto = [&](SiteId s, std::size_t upto) {
      while (received[s - 1] < upto) {
        const auto& msg = server.log()[received[s - 1]++];
        clients[s - 1].receive(msg);
        res.trace.push_back({0, TraceEvent::Kind::apply, s, msg.site, msg.revision, {}});
      }
    };
    try {
      for (std::size_t slot : order) {
        auto s = static_cast<SiteId>(slots[slot]);
        OTWireOp msg;
        if (sent[s - 1] == 0) {
          msg = first_msg[s - 1].front();
        } else {
          // Wait for the ack of the previous message; it releases the buffer.
          std::size_t ack_at = 0;
          for (std::size_t i = 0; i < server.log().size(); ++i)
            if (server.log()[i].site == s) ack_at = i + 1;
          deliver_upto(s, ack_at);
          auto out = clients[s - 1].take_outbox();
          msg = out.front();
        }
        ++sent[s - 1];
        auto rebased = server.integrate(msg);
        res.trace.push_back({0, TraceEvent::Kind::relay, 0, rebased.site, rebased.revision, {}});
      }
      for (SiteId s = 1; s <= script.m; ++s) deliver_upto(s, server.log().size());
    } catch (const std::exception& ex) {
      res.errors.push_back(ex.what());
    }
    for (const auto& c : clients) res.texts.push_back(c.text());
    res.server_text = server.text();
    results.push_back(std::move(res));
  });
  return results;
}

// One ScenarioResult per combination of per-site delivery orders.
inline std::vector<ScenarioResult> enumerate_orders(const ConcurrentScript& script, const EngineConfig& engine,
                                                    DeliveryPolicy policy = DeliveryPolicy::causal_order) {
  if (engine.kind == EngineKind::ot_server) return enumerate_server_orders(script, engine);
  auto outcomes = enumerate_site_outcomes(script, engine, policy);
  std::vector<ScenarioResult> results;
  std::vector<std::size_t> pick(script.m, 0);
  while (true) {
    ScenarioResult res;
    res.engine = engine;
    for (SiteId s = 1; s <= script.m; ++s) {
      const auto& o = outcomes[s - 1][pick[s - 1]];
      res.texts.push_back(o.text);
      for (auto [origin, seq] : o.order) res.trace.push_back({0, TraceEvent::Kind::apply, s, origin, seq, {}});
      if (o.error) res.errors.push_back("site " + std::to_string(s) + ": " + *o.error);
    }
    results.push_back(std::move(res));
    std::size_t k = 0;
    while (k < pick.size() && ++pick[k] == outcomes[k].size()) pick[k++] = 0;
    if (k == pick.size()) break;
  }
  return results;
}

}  // namespace coedit
