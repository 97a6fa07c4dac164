#pragma once

// Transport-free relay core. A Session serializes everything that touches
// its engines behind one mutex; callers get back the messages to deliver,
// already in per-sender order.
//
// Replica-proxy mode hosts one engine replica per member. Each member's
// client edits against a mirror that may lag its server-side replica, so
// every member link runs a two-party transforming server: client edits are
// rebased over patches the client had not yet seen, then handed to the
// member's replica as local edits.

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coedit/relay/protocol.hpp"
#include "coedit/replica.hpp"

namespace coedit::relay {

using Clock = std::chrono::steady_clock;

struct Outgoing {
  SiteId to = 0;
  ProtocolMessage msg;
};

class Session {
 public:
  Session(std::string id, EngineConfig engine, Mode mode, std::optional<std::filesystem::path> log_file = {})
      : id_(std::move(id)), engine_(engine), mode_(mode), touched_(Clock::now()) {
    bool ot_family = engine.kind == EngineKind::ot || engine.kind == EngineKind::ot_server;
    if (mode == Mode::transforming_server && !ot_family)
      throw ConfigError("transforming-server mode is OT-only, got " + describe(engine));
    if (mode == Mode::pure_relay && engine.kind == EngineKind::ot_server)
      throw ConfigError("ot-server needs a transforming server; use transforming-server or replica-proxy");
    if (mode == Mode::transforming_server || engine.kind == EngineKind::ot_server) central_.emplace(engine.tie);
    else shadow_.emplace(engine, 0);
    if (log_file) log_.emplace(*log_file, std::ios::app);
  }

  const std::string& id() const { return id_; }
  const EngineConfig& engine() const { return engine_; }
  Mode mode() const { return mode_; }

  // Admits a new member: a snapshot goes to the newcomer, `joined` to all.
  std::vector<Outgoing> join() {
    std::lock_guard lock(mu_);
    touched_ = Clock::now();
    SiteId site = next_site_++;
    Member& m = members_[site];
    m.site = site;
    if (mode_ == Mode::replica_proxy) {
      m.link.emplace(TieBreakPolicy::site_order);
      m.link->seed(text_locked());
      m.replica.emplace(engine_, site);
      if (central_) {
        m.replica->as<OTClient>()->seed(central_->text(), central_->revision());
      } else {
        for (const auto& w : wire_log_) m.replica->remote(w);
      }
    }
    record("join", site);
    std::vector<Outgoing> out{{site, snapshot_locked(site)}};
    ProtocolMessage joined;
    joined.kind = Kind::joined;
    joined.session = id_;
    joined.site = site;
    joined.members = member_ids();
    for (const auto& [s, _] : members_) out.push_back({s, joined});
    return out;
  }

  // Handles one client message (op, snapshot or leave) from a member.
  std::vector<Outgoing> submit(SiteId site, const ProtocolMessage& msg) {
    if (msg.kind == Kind::leave) return leave(site);
    std::lock_guard lock(mu_);
    touched_ = Clock::now();
    auto it = members_.find(site);
    if (it == members_.end()) throw PreconditionError("site " + std::to_string(site) + " is not a member");
    Member& m = it->second;
    if (msg.kind == Kind::snapshot) return {{site, snapshot_locked(site)}};
    if (msg.kind != Kind::op) throw ConfigError(std::string("clients may not send '") + to_string(msg.kind) + "'");

    if (msg.seq <= m.last_seq) return {{site, ack(m, msg.seq)}};  // resent after a reconnect
    if (msg.seq != m.last_seq + 1)
      throw SequenceGapError("site " + std::to_string(site) + " sent seq " + std::to_string(msg.seq) + ", expected " +
                             std::to_string(m.last_seq + 1));
    record(encode(msg), site);

    std::vector<Outgoing> out;
    switch (mode_) {
      case Mode::pure_relay: relay_wire(m, msg, out); break;
      case Mode::transforming_server: transform_at_server(m, msg, out); break;
      case Mode::replica_proxy: proxy(m, msg, out); break;
    }
    m.last_seq = msg.seq;
    return out;
  }

  // Idempotent; the session itself outlives its last member until reaped.
  std::vector<Outgoing> leave(SiteId site) {
    std::lock_guard lock(mu_);
    touched_ = Clock::now();
    if (!members_.erase(site)) return {};
    record("leave", site);
    ProtocolMessage left;
    left.kind = Kind::leave;
    left.session = id_;
    left.site = site;
    left.members = member_ids();
    std::vector<Outgoing> out;
    for (const auto& [s, _] : members_) out.push_back({s, left});
    return out;
  }

  // Site 0 asks for the session-level view (server replica, log length).
  ProtocolMessage snapshot(SiteId site = 0) const {
    std::lock_guard lock(mu_);
    return snapshot_locked(site);
  }

  Text text() const {
    std::lock_guard lock(mu_);
    return text_locked();
  }

  std::vector<SiteId> members() const {
    std::lock_guard lock(mu_);
    return member_ids();
  }

  // The transforming server's total order; empty when there is none.
  std::vector<OTWireOp> server_log() const {
    std::lock_guard lock(mu_);
    return central_ ? central_->log() : std::vector<OTWireOp>{};
  }

  // Server-side replica texts per member (replica-proxy), for checking.
  std::map<SiteId, Text> replica_texts() const {
    std::lock_guard lock(mu_);
    std::map<SiteId, Text> out;
    for (const auto& [s, m] : members_)
      if (m.replica) out[s] = m.replica->text();
    return out;
  }

  bool reclaimable(Clock::time_point now, Clock::duration idle) const {
    std::lock_guard lock(mu_);
    return members_.empty() && now - touched_ >= idle;
  }

 private:
  struct Member {
    SiteId site = 0;
    std::uint64_t last_seq = 0;
    std::uint64_t last_ack = 0;  // revision reported in the latest ack
    std::optional<OTServer> link;
    std::optional<Replica> replica;
  };

  Text text_locked() const {
    if (central_) return central_->text();
    return shadow_->text();
  }

  std::uint64_t revision_locked() const {
    if (central_) return central_->revision();
    return wire_log_.size();
  }

  std::vector<SiteId> member_ids() const {
    std::vector<SiteId> ids;
    for (const auto& [s, _] : members_) ids.push_back(s);
    return ids;
  }

  ProtocolMessage snapshot_locked(SiteId site) const {
    ProtocolMessage s;
    s.kind = Kind::snapshot;
    s.session = id_;
    s.site = site;
    s.engine = engine_;
    s.mode = mode_;
    s.members = member_ids();
    auto it = members_.find(site);
    if (mode_ == Mode::replica_proxy && it != members_.end()) {
      s.text = to_utf8(it->second.link->text());
      s.revision = it->second.link->revision();
    } else {
      s.text = to_utf8(text_locked());
      s.revision = revision_locked();
      if (mode_ == Mode::pure_relay) s.log = wire_log_;
    }
    return s;
  }

  ProtocolMessage ack(const Member& m, std::uint64_t seq) const {
    ProtocolMessage a;
    a.kind = Kind::ack;
    a.session = id_;
    a.site = m.site;
    a.seq = seq;
    a.revision = m.last_ack;
    return a;
  }

  void relay_wire(Member& m, const ProtocolMessage& msg, std::vector<Outgoing>& out) {
    if (!msg.wire) throw ConfigError("pure-relay op needs a wire payload");
    if (msg.wire->site() != m.site) throw ConfigError("wire op origin does not match sender");
    shadow_->remote(*msg.wire);
    wire_log_.push_back(*msg.wire);
    m.last_ack = wire_log_.size();
    out.push_back({m.site, ack(m, msg.seq)});
    ProtocolMessage fwd;
    fwd.kind = Kind::op;
    fwd.session = id_;
    fwd.site = m.site;
    fwd.seq = msg.seq;
    fwd.revision = wire_log_.size();
    fwd.wire = msg.wire;
    for (const auto& [s, _] : members_)
      if (s != m.site) out.push_back({s, fwd});
  }

  static OpList stamped(OpList ops, SiteId site) {
    for (auto& op : ops) {
      op.site = site;
      op.seq = 0;
    }
    return ops;
  }

  void transform_at_server(Member& m, const ProtocolMessage& msg, std::vector<Outgoing>& out) {
    OTWireOp rebased = central_->integrate(OTWireOp{stamped(msg.ops, m.site), m.site, msg.seq, {}, msg.revision});
    m.last_ack = rebased.revision;
    out.push_back({m.site, ack(m, msg.seq)});
    ProtocolMessage fwd;
    fwd.kind = Kind::op;
    fwd.session = id_;
    fwd.site = m.site;
    fwd.revision = rebased.revision;
    fwd.ops = rebased.ops;
    for (const auto& [s, _] : members_)
      if (s != m.site) out.push_back({s, fwd});
  }

  void proxy(Member& m, const ProtocolMessage& msg, std::vector<Outgoing>& out) {
    OTWireOp rebased = m.link->integrate(OTWireOp{stamped(msg.ops, m.site), m.site, msg.seq, {}, msg.revision});
    m.last_ack = rebased.revision;
    out.push_back({m.site, ack(m, msg.seq)});

    std::deque<std::pair<SiteId, WireOp>> pending;
    for (const auto& op : rebased.ops) {
      if (op.is_noop()) continue;
      for (auto& w : m.replica->local(op)) pending.emplace_back(m.site, std::move(w));
    }
    while (!pending.empty()) {
      auto [origin, w] = std::move(pending.front());
      pending.pop_front();
      if (central_) {
        // ot-server engine: the session's own server orders client messages
        WireOp ordered{central_->integrate(std::get<OTWireOp>(w.payload))};
        for (auto& [s, other] : members_) {
          OpList patch = other.replica->remote(ordered);
          if (s != origin) send_patch(other, origin, patch, out);
          for (auto& next : other.replica->take_outbox()) pending.emplace_back(s, WireOp{std::move(next)});
        }
      } else {
        shadow_->remote(w);
        wire_log_.push_back(w);
        for (auto& [s, other] : members_)
          if (s != origin) send_patch(other, origin, other.replica->remote(w), out);
      }
    }
  }

  void send_patch(Member& to, SiteId origin, const OpList& patch, std::vector<Outgoing>& out) {
    if (patch.empty()) return;
    OTWireOp entry = to.link->integrate(OTWireOp{stamped(patch, origin), origin, 0, {}, to.link->revision()});
    ProtocolMessage p;
    p.kind = Kind::patch;
    p.session = id_;
    p.site = origin;
    p.revision = entry.revision;
    p.ops = entry.ops;
    out.push_back({to.site, std::move(p)});
  }

  void record(const std::string& what, SiteId site) {
    if (!log_) return;
    *log_ << site << ' ' << what << '\n';
    log_->flush();
  }

  std::string id_;
  EngineConfig engine_;
  Mode mode_;
  mutable std::mutex mu_;
  Clock::time_point touched_;
  SiteId next_site_ = 1;
  std::map<SiteId, Member> members_;
  std::optional<Replica> shadow_;  // sees every wire op, never edits
  std::vector<WireOp> wire_log_;
  std::optional<OTServer> central_;
  std::optional<std::ofstream> log_;
};

struct ManagerOptions {
  std::chrono::seconds idle_timeout{600};
  std::optional<std::filesystem::path> log_dir;
};

class SessionManager {
 public:
  explicit SessionManager(ManagerOptions opt = {}) : opt_(std::move(opt)), rng_(std::random_device{}()) {}

  std::string create(const EngineConfig& engine, Mode mode) {
    std::lock_guard lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%llu-%06llx", static_cast<unsigned long long>(++created_),
                  static_cast<unsigned long long>(rng_() & 0xFFFFFF));
    std::string id = buf;
    std::optional<std::filesystem::path> log;
    if (opt_.log_dir) {
      std::filesystem::create_directories(*opt_.log_dir);
      log = *opt_.log_dir / (id + ".log");
    }
    sessions_.emplace(id, std::make_shared<Session>(id, engine, mode, log));
    return id;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSession("no session '" + id + "'");
    return it->second;
  }

  // Drops sessions that have been empty for the idle timeout.
  std::size_t reap(Clock::time_point now = Clock::now()) {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (it->second->reclaimable(now, opt_.idle_timeout)) {
        it = sessions_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

  const ManagerOptions& options() const { return opt_; }

 private:
  ManagerOptions opt_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::uint64_t created_ = 0;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace coedit::relay
