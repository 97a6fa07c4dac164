#pragma once

// Client-side state for one relay member. In replica-proxy and
// transforming-server modes the client keeps a text mirror and runs the
// Jupiter client half over position-based edits; in pure-relay mode it
// holds a full engine replica.

#include <optional>
#include <vector>

#include "coedit/relay/protocol.hpp"
#include "coedit/replica.hpp"

namespace coedit::relay {

class ClientMirror {
 public:
  explicit ClientMirror(const ProtocolMessage& snapshot) { reset(snapshot); }

  SiteId site() const { return site_; }
  Mode mode() const { return mode_; }
  const std::string& session() const { return session_; }
  std::uint64_t revision() const { return revision_; }

  Text text() const { return jupiter_ ? jupiter_->text() : replica_->text(); }

  // Nothing sent is still waiting for its ack.
  bool idle() const { return jupiter_ ? !jupiter_->awaiting_ack() && jupiter_->buffered() == 0 : unacked_ == 0; }

  // Applies a local edit to the mirror; returns the frames to send now.
  std::vector<ProtocolMessage> edit(const EditOp& op) {
    std::vector<ProtocolMessage> out;
    if (jupiter_) {
      if (auto w = jupiter_->local(op)) out.push_back(op_message(w->ops, w->revision));
      return out;
    }
    for (auto& w : replica_->local(op)) {
      ProtocolMessage m = base(Kind::op);
      m.seq = ++seq_;
      m.wire = std::move(w);
      out.push_back(std::move(m));
      ++unacked_;
    }
    return out;
  }

  // Handles one server frame; returns frames released by it (buffered edits
  // after an ack). Frames already covered by the mirror's revision are dropped.
  std::vector<ProtocolMessage> receive(const ProtocolMessage& m) {
    std::vector<ProtocolMessage> out;
    switch (m.kind) {
      case Kind::ack:
        if (m.seq <= acked_seq_) break;
        acked_seq_ = m.seq;
        if (jupiter_) {
          jupiter_->receive(OTWireOp{{}, site_, m.seq, {}, m.revision});
          revision_ = m.revision;
          for (auto& w : jupiter_->take_outbox()) out.push_back(op_message(w.ops, w.revision));
        } else {
          --unacked_;
          revision_ = std::max(revision_, m.revision);
        }
        break;
      case Kind::op:
      case Kind::patch:
        if (m.revision <= revision_) break;
        if (jupiter_) {
          jupiter_->receive(OTWireOp{m.ops, m.site, 0, {}, m.revision});
        } else {
          if (!m.wire) throw ConfigError("pure-relay op without wire payload");
          replica_->remote(*m.wire);
        }
        revision_ = m.revision;
        break;
      case Kind::joined:
      case Kind::leave: members_ = m.members; break;
      case Kind::snapshot: resync(m); break;
      case Kind::error:
      case Kind::join: break;
    }
    return out;
  }

  // Replaces the mirror with a fresh snapshot; only legal with nothing in
  // flight, since unacknowledged edits cannot be matched against it.
  void resync(const ProtocolMessage& snapshot) {
    if (!idle()) throw PreconditionError("cannot resync with edits in flight");
    std::uint64_t seq = seq_, acked = acked_seq_;
    std::uint64_t sent = jupiter_ ? sent_messages_ : 0;
    reset(snapshot);
    seq_ = seq;
    acked_seq_ = acked;
    sent_messages_ = sent;
  }

  const std::vector<SiteId>& members() const { return members_; }

 private:
  void reset(const ProtocolMessage& s) {
    if (s.kind != Kind::snapshot || !s.engine || !s.mode || !s.text)
      throw ConfigError("mirror needs a snapshot with engine, mode and text");
    session_ = s.session;
    site_ = s.site;
    mode_ = *s.mode;
    revision_ = s.revision;
    members_ = s.members;
    jupiter_.reset();
    replica_.reset();
    if (mode_ == Mode::pure_relay) {
      replica_.emplace(*s.engine, site_);
      for (const auto& w : s.log) replica_->remote(w);
    } else {
      TieBreakPolicy tie = mode_ == Mode::replica_proxy ? TieBreakPolicy::site_order : s.engine->tie;
      jupiter_.emplace(site_, tie);
      jupiter_->seed(from_utf8(*s.text), s.revision);
    }
  }

  ProtocolMessage base(Kind k) const {
    ProtocolMessage m;
    m.kind = k;
    m.session = session_;
    m.site = site_;
    return m;
  }

  ProtocolMessage op_message(const OpList& ops, std::uint64_t revision) {
    ProtocolMessage m = base(Kind::op);
    m.seq = ++sent_messages_;
    m.revision = revision;
    m.ops = ops;
    return m;
  }

  std::string session_;
  SiteId site_ = 0;
  Mode mode_ = Mode::replica_proxy;
  std::uint64_t revision_ = 0;
  std::uint64_t seq_ = 0;            // pure-relay frames sent
  std::uint64_t sent_messages_ = 0;  // Jupiter frames sent
  std::uint64_t acked_seq_ = 0;
  std::uint64_t unacked_ = 0;
  std::vector<SiteId> members_;
  std::optional<OTClient> jupiter_;
  std::optional<Replica> replica_;
};

}  // namespace coedit::relay
