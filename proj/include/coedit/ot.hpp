#pragma once

// Operational transformation: character/string-wise inclusion transforms,
// a distributed replica that integrates remote operations along one
// canonical total order (undo/transform/redo), and the server-based
// variant (transforming server + single-pending-op client).

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "coedit/core.hpp"

namespace coedit {

using OpList = std::vector<EditOp>;

enum class TieBreakPolicy {
  site_order,  // smaller site id keeps its position on an insert/insert tie
  naive_left,  // the transformed op always keeps its position (flawed on purpose)
};

inline const char* to_string(TieBreakPolicy p) { return p == TieBreakPolicy::site_order ? "site-order" : "naive-left"; }

// ---------------------------------------------------------------------------
// Inclusion transformation of primitive ops. `a` and `b` are defined on the
// same document state; the result is `a` rewritten to apply after `b`.
// A delete that straddles an insert point splits in two, hence the list.

inline OpList it_transform(const EditOp& a, const EditOp& b, TieBreakPolicy policy = TieBreakPolicy::site_order) {
  if (a.is_noop() || b.is_noop()) return {a};
  EditOp r = a;
  if (a.is_insert() && b.is_insert()) {
    bool shift = false;
    if (a.pos > b.pos) {
      shift = true;
    } else if (a.pos == b.pos && policy == TieBreakPolicy::site_order) {
      shift = a.site > b.site || (a.site == b.site && a.seq > b.seq);
    }
    if (shift) r.pos += b.content.size();
    return {r};
  }
  if (a.is_insert()) {  // b deletes [b.pos, b.pos + b.length)
    if (a.pos <= b.pos) return {r};
    if (a.pos >= b.pos + b.length)
      r.pos -= b.length;
    else
      r.pos = b.pos;
    return {r};
  }
  std::size_t a_end = a.pos + a.length;
  if (b.is_insert()) {
    std::size_t n = b.content.size();
    if (b.pos >= a_end) return {r};
    if (b.pos <= a.pos) {
      r.pos += n;
      return {r};
    }
    // Insert lands strictly inside the deleted range: delete the right part
    // first so the left part keeps its position.
    EditOp right = EditOp::del(b.pos + n, a_end - b.pos, a.site, a.seq);
    EditOp left = EditOp::del(a.pos, b.pos - a.pos, a.site, a.seq);
    return {right, left};
  }
  std::size_t b_end = b.pos + b.length;
  std::size_t lo = std::max(a.pos, b.pos);
  std::size_t hi = std::min(a_end, b_end);
  std::size_t overlap = hi > lo ? hi - lo : 0;
  std::size_t remaining = a.length - overlap;
  if (remaining == 0) return {EditOp::noop(a.site, a.seq)};
  if (a.pos < b.pos)
    r.pos = a.pos;
  else if (a.pos >= b_end)
    r.pos = a.pos - b.length;
  else
    r.pos = b.pos;
  r.length = remaining;
  return {r};
}

inline OpList normalize(OpList ops) {
  if (ops.empty()) return ops;
  OpList out;
  for (auto& op : ops)
    if (!op.is_noop()) out.push_back(std::move(op));
  if (out.empty()) out.push_back(ops.front());
  return out;
}

// Transforms two op sequences defined on the same state against each other.
// Returns {a', b'} with apply(apply(s, a), b') == apply(apply(s, b), a')
// whenever the primitive transform satisfies that property.
inline std::pair<OpList, OpList> transform_pair(const OpList& a, const OpList& b,
                                                TieBreakPolicy policy = TieBreakPolicy::site_order) {
  if (a.empty() || b.empty()) return {a, b};
  if (a.size() == 1 && b.size() == 1) return {it_transform(a[0], b[0], policy), it_transform(b[0], a[0], policy)};
  if (a.size() > 1) {
    auto [head, b1] = transform_pair(OpList{a[0]}, b, policy);
    auto [tail, b2] = transform_pair(OpList(a.begin() + 1, a.end()), b1, policy);
    head.insert(head.end(), tail.begin(), tail.end());
    return {std::move(head), std::move(b2)};
  }
  auto [a1, bh] = transform_pair(a, OpList{b[0]}, policy);
  auto [a2, bt] = transform_pair(a1, OpList(b.begin() + 1, b.end()), policy);
  bh.insert(bh.end(), bt.begin(), bt.end());
  return {std::move(a2), std::move(bh)};
}

// Applies ops in order, returning the inverse sequence (already reversed).
inline OpList apply_ops(Text& text, const OpList& ops) {
  OpList inverse;
  inverse.reserve(ops.size());
  for (const auto& op : ops) {
    if (op.is_noop()) continue;
    inverse.push_back(apply_text(text, op));
  }
  std::reverse(inverse.begin(), inverse.end());
  return inverse;
}

// Rejects ops that do not fit `text` without touching it.
inline void check_range(const Text& text, const OpList& ops) {
  Text scratch = text;
  apply_ops(scratch, ops);
}

// ---------------------------------------------------------------------------
// Wire form. Distributed mode stamps a vector clock; server mode a revision.

struct OTWireOp {
  OpList ops;
  SiteId site = 0;
  std::uint64_t seq = 0;
  VectorClock clock;
  std::uint64_t revision = 0;

  friend bool operator==(const OTWireOp&, const OTWireOp&) = default;
};

// ---------------------------------------------------------------------------
// Distributed OT replica.
//
// History is kept in a total order compatible with causality: key =
// (number of ops in the op's clock, site). Every history entry stores its
// canonical form, i.e. the original op transformed to the state produced by
// all entries ahead of it. Forms are computed from original ops only, so all
// replicas hold identical histories and no transform needs TP2.
//
// A remote op landing in the middle of the history is integrated by undoing
// the suffix, applying the op's form and redoing the suffix with refreshed
// forms. Entries that every participant has seen and that are ordered before
// every unstable entry are pruned.

class OTReplica {
 public:
  using OpId = std::pair<SiteId, std::uint64_t>;

  struct Stats {
    std::uint64_t local_ops = 0;
    std::uint64_t remote_ops = 0;
    std::uint64_t transform_calls = 0;       // op-level IT invocations, cumulative
    std::uint64_t last_transform_calls = 0;  // for the most recent remote op
    std::uint64_t last_concurrent = 0;       // c for the most recent remote op
    std::uint64_t max_concurrent = 0;
    std::uint64_t max_transform_calls = 0;
    std::uint64_t max_history = 0;
    std::uint64_t redone_ops = 0;
  };

  explicit OTReplica(SiteId site, TieBreakPolicy policy = TieBreakPolicy::site_order,
                     std::vector<SiteId> participants = {})
      : site_(site), policy_(policy), participants_(std::move(participants)) {}

  // Shared initial text, identical at every replica before any op.
  void seed(Text text) { text_ = std::move(text); }

  SiteId site() const { return site_; }
  const Text& text() const { return text_; }
  const VectorClock& delivered() const { return delivered_; }
  const Stats& stats() const { return stats_; }
  std::size_t history_size() const { return history_.size(); }
  TieBreakPolicy policy() const { return policy_; }

  OTWireOp local(const EditOp& edit) {
    EditOp op = edit;
    op.site = site_;
    op.seq = delivered_.get(site_) + 1;
    OpList inverse = apply_ops(text_, OpList{op});  // throws RangeError before any state change
    VectorClock clock = delivered_;
    clock.tick(site_);
    delivered_ = clock;
    seen_[site_] = delivered_;

    Record rec{op, clock, OpId{site_, op.seq}};
    records_.emplace(rec.id, rec);
    history_.push_back(Entry{rec.id, OpList{op}, std::move(inverse)});
    ++stats_.local_ops;
    stats_.max_history = std::max<std::uint64_t>(stats_.max_history, history_.size());
    return OTWireOp{OpList{op}, site_, op.seq, clock, 0};
  }

  // Integrates a causally ready remote op; returns the position-based edits
  // applied to the local text, in application order.
  OpList remote(const OTWireOp& w) {
    if (w.ops.size() != 1) throw std::invalid_argument("distributed OT wire op must carry exactly one op");
    if (!causally_ready(w.clock, w.site, delivered_))
      throw CausalityError("op " + std::to_string(w.site) + "#" + std::to_string(w.seq) + " not causally ready");

    std::uint64_t calls_before = stats_.transform_calls;
    Record rec{w.ops.front(), w.clock, OpId{w.site, w.clock.get(w.site)}};
    rec.op.site = w.site;
    rec.op.seq = rec.id.second;

    std::uint64_t concurrent = 0;
    for (const auto& e : history_)
      if (vc_compare(records_.at(e.id).clock, w.clock) == CausalOrder::concurrent) ++concurrent;

    auto key = key_of(rec);
    std::size_t slot = history_.size();
    while (slot > 0 && key_of(records_.at(history_[slot - 1].id)) > key) --slot;

    records_.emplace(rec.id, rec);

    OpList applied;
    // Undo the suffix that sorts after the new op.
    VectorClock cut = delivered_;
    for (std::size_t i = history_.size(); i-- > slot;) {
      const auto& e = history_[i];
      for (const auto& inv : e.inverse) {
        apply_text(text_, inv);
        applied.push_back(inv);
      }
      cut.set(e.id.first, cut.get(e.id.first) - 1);
    }

    OpList form_new = form(rec, cut);
    Entry entry{rec.id, form_new, apply_ops(text_, form_new)};
    for (const auto& op : form_new)
      if (!op.is_noop()) applied.push_back(op);
    cut.tick(rec.id.first);

    for (std::size_t i = slot; i < history_.size(); ++i) {
      auto& e = history_[i];
      const Record& r = records_.at(e.id);
      e.form = form(r, cut);
      e.inverse = apply_ops(text_, e.form);
      for (const auto& op : e.form)
        if (!op.is_noop()) applied.push_back(op);
      cut.tick(e.id.first);
      ++stats_.redone_ops;
    }
    history_.insert(history_.begin() + static_cast<std::ptrdiff_t>(slot), std::move(entry));

    delivered_.tick(w.site);
    seen_[site_] = delivered_;
    seen_[w.site].merge(w.clock);

    ++stats_.remote_ops;
    stats_.last_concurrent = concurrent;
    stats_.max_concurrent = std::max(stats_.max_concurrent, concurrent);
    stats_.last_transform_calls = stats_.transform_calls - calls_before;
    stats_.max_transform_calls = std::max(stats_.max_transform_calls, stats_.last_transform_calls);
    stats_.max_history = std::max<std::uint64_t>(stats_.max_history, history_.size());
    prune();
    return applied;
  }

  std::map<std::string, double> metrics() const {
    return {{"C", static_cast<double>(text_.size())},
            {"history", static_cast<double>(history_.size())},
            {"max_history", static_cast<double>(stats_.max_history)},
            {"transform_calls", static_cast<double>(stats_.transform_calls)},
            {"max_transform_calls", static_cast<double>(stats_.max_transform_calls)},
            {"c_max", static_cast<double>(stats_.max_concurrent)},
            {"redone_ops", static_cast<double>(stats_.redone_ops)},
            {"memo", static_cast<double>(memo_.size())}};
  }

 private:
  struct Record {
    EditOp op;          // as generated
    VectorClock clock;  // includes the op itself
    OpId id;
  };
  struct Entry {
    OpId id;
    OpList form;     // canonical form at this position
    OpList inverse;  // undoes `form`
  };

  static std::pair<std::uint64_t, SiteId> key_of(const Record& r) { return {r.clock.sum(), r.id.first}; }

  static VectorClock context_of(const Record& r) {
    VectorClock ctx = r.clock;
    ctx.set(r.id.first, ctx.get(r.id.first) - 1);
    return ctx;
  }

  // `o` transformed onto the state of cut `v` (a causally closed op set that
  // contains o's context but not o). Peels the last op of v \ ctx(o) in the
  // total order and recurses; memoised.
  OpList form(const Record& o, const VectorClock& v) {
    VectorClock ctx = context_of(o);
    if (v == ctx) return OpList{o.op};
    auto memo_key = std::make_pair(o.id, v);
    if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;

    const Record* last = nullptr;
    for (auto [s, count] : v.entries()) {
      if (count <= ctx.get(s)) continue;
      const Record& cand = records_.at(OpId{s, count});
      if (!last || key_of(cand) > key_of(*last)) last = &cand;
    }
    VectorClock reduced = v;
    reduced.set(last->id.first, reduced.get(last->id.first) - 1);
    OpList mine = form(o, reduced);
    OpList theirs = form(*last, reduced);
    OpList result = normalize(transform_pair(mine, theirs, policy_).first);
    ++stats_.transform_calls;
    memo_.emplace(std::move(memo_key), result);
    return result;
  }

  void prune() {
    if (participants_.empty()) return;
    VectorClock stable;
    bool first = true;
    for (SiteId p : participants_) {
      const VectorClock& s = seen_[p];
      if (first) {
        stable = s;
        first = false;
        continue;
      }
      VectorClock m;
      for (auto [site, v] : stable.entries()) m.set(site, std::min(v, s.get(site)));
      stable = m;
    }
    auto is_stable = [&](const OpId& id) { return id.second <= stable.get(id.first); };

    // Longest stable prefix that every later entry causally follows; those
    // ops sit in the context of every remaining and future op, so no form
    // computation can reach them again.
    std::size_t n = 0;
    while (n < history_.size() && is_stable(history_[n].id)) ++n;
    for (; n > 0; --n) {
      bool clean = true;
      for (std::size_t j = n; j < history_.size() && clean; ++j) {
        const VectorClock& later = records_.at(history_[j].id).clock;
        for (std::size_t i = 0; i < n && clean; ++i)
          clean = vc_compare(records_.at(history_[i].id).clock, later) != CausalOrder::concurrent;
      }
      if (clean) break;
    }
    if (n == 0) return;
    std::set<OpId> gone;
    for (std::size_t i = 0; i < n; ++i) gone.insert(history_[i].id);
    history_.erase(history_.begin(), history_.begin() + static_cast<std::ptrdiff_t>(n));
    for (const auto& id : gone) records_.erase(id);
    for (auto it = memo_.begin(); it != memo_.end();) {
      if (gone.count(it->first.first))
        it = memo_.erase(it);
      else
        ++it;
    }
  }

  SiteId site_;
  TieBreakPolicy policy_;
  std::vector<SiteId> participants_;
  Text text_;
  VectorClock delivered_;
  std::map<SiteId, VectorClock> seen_;
  std::map<OpId, Record> records_;
  std::vector<Entry> history_;
  std::map<std::pair<OpId, VectorClock>, OpList> memo_;
  Stats stats_;
};

// ---------------------------------------------------------------------------
// Server-based OT. The server keeps a totally ordered log; a client op
// generated at revision r is transformed against log entries after r.

class OTServer {
 public:
  explicit OTServer(TieBreakPolicy policy = TieBreakPolicy::site_order) : policy_(policy) {}

  void seed(Text text) { text_ = std::move(text); }
  const Text& text() const { return text_; }
  std::uint64_t revision() const { return log_.size(); }
  const std::vector<OTWireOp>& log() const { return log_; }
  std::uint64_t transform_calls() const { return transform_calls_; }
  std::uint64_t last_transform_calls() const { return last_calls_; }

  // Rebases `w` onto the head revision, applies it and returns the entry to
  // broadcast (its `revision` is the new head).
  OTWireOp integrate(const OTWireOp& w) {
    if (w.revision > revision())
      throw StaleRevisionError("op cites revision " + std::to_string(w.revision) + " but server is at " +
                               std::to_string(revision()));
    OpList ops = w.ops;
    last_calls_ = 0;
    for (std::size_t i = w.revision; i < log_.size(); ++i) {
      ops = normalize(transform_pair(ops, log_[i].ops, policy_).first);
      ++last_calls_;
    }
    transform_calls_ += last_calls_;
    apply_ops(text_, ops);
    OTWireOp out{std::move(ops), w.site, w.seq, w.clock, revision() + 1};
    log_.push_back(out);
    return out;
  }

 private:
  TieBreakPolicy policy_;
  Text text_;
  std::vector<OTWireOp> log_;
  std::uint64_t transform_calls_ = 0;
  std::uint64_t last_calls_ = 0;
};

// Client half: at most one op in flight; later local edits are buffered and
// sent as one compound op when the in-flight op is acknowledged.
class OTClient {
 public:
  explicit OTClient(SiteId site, TieBreakPolicy policy = TieBreakPolicy::site_order) : site_(site), policy_(policy) {}

  void seed(Text text, std::uint64_t revision = 0) {
    text_ = std::move(text);
    revision_ = revision;
  }

  SiteId site() const { return site_; }
  const Text& text() const { return text_; }
  std::uint64_t revision() const { return revision_; }
  bool awaiting_ack() const { return awaiting_.has_value(); }
  std::size_t buffered() const { return buffer_.size(); }
  std::uint64_t transform_calls() const { return transform_calls_; }

  // Applies a local edit. Returns the op to send now, if the channel is free.
  std::optional<OTWireOp> local(const EditOp& edit) {
    EditOp op = edit;
    op.site = site_;
    op.seq = ++local_seq_;
    apply_ops(text_, OpList{op});
    if (awaiting_) {
      buffer_.push_back(op);
      return std::nullopt;
    }
    awaiting_ = OpList{op};
    return OTWireOp{*awaiting_, site_, ++sent_, {}, revision_};
  }

  // Handles one server message in log order: an ack of our own op or a
  // rebased op from another site. Returns the edits applied locally.
  OpList receive(const OTWireOp& msg) {
    if (msg.site == site_) {
      awaiting_.reset();
      revision_ = msg.revision;
      if (!buffer_.empty()) {
        awaiting_ = std::move(buffer_);
        buffer_.clear();
        outbox_.push_back(OTWireOp{*awaiting_, site_, ++sent_, {}, revision_});
      }
      return {};
    }
    OpList incoming = msg.ops;
    if (awaiting_) {
      auto [mine, theirs] = transform_pair(*awaiting_, incoming, policy_);
      awaiting_ = normalize(std::move(mine));
      incoming = std::move(theirs);
      ++transform_calls_;
    }
    if (!buffer_.empty()) {
      auto [mine, theirs] = transform_pair(buffer_, incoming, policy_);
      buffer_ = normalize(std::move(mine));
      incoming = std::move(theirs);
      ++transform_calls_;
    }
    incoming = normalize(std::move(incoming));
    apply_ops(text_, incoming);
    revision_ = msg.revision;
    OpList applied;
    for (auto& op : incoming)
      if (!op.is_noop()) applied.push_back(op);
    return applied;
  }

  // Ops released by an ack, to be sent to the server.
  std::vector<OTWireOp> take_outbox() { return std::exchange(outbox_, {}); }

 private:
  SiteId site_;
  TieBreakPolicy policy_;
  Text text_;
  std::uint64_t revision_ = 0;
  std::uint64_t local_seq_ = 0;
  std::uint64_t sent_ = 0;
  std::optional<OpList> awaiting_;
  OpList buffer_;
  std::vector<OTWireOp> outbox_;
  std::uint64_t transform_calls_ = 0;
};

}  // namespace coedit
