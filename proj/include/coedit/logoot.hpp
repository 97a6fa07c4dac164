#pragma once

// Logoot: non-tombstone sequence CRDT with variable-length position
// identifiers. Deletes physically remove elements, so concurrent
// insert/delete correctness relies on causal delivery.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "coedit/core.hpp"

namespace coedit {

inline constexpr std::uint32_t kLogootBase = 1u << 16;

struct LogootTriple {
  std::uint32_t digit = 0;
  SiteId site = 0;
  std::uint64_t clock = 0;

  friend bool operator==(const LogootTriple&, const LogootTriple&) = default;
  friend auto operator<=>(const LogootTriple&, const LogootTriple&) = default;
};

struct LogootId {
  std::vector<LogootTriple> path;

  static LogootId min() { return {{{0, 0, 0}}}; }
  static LogootId max() { return {{{kLogootBase - 1, 0, 0}}}; }

  friend bool operator==(const LogootId&, const LogootId&) = default;
};

// Lexicographic over triples; a strict prefix sorts first.
inline std::strong_ordering lid_compare(const LogootId& a, const LogootId& b) {
  std::size_t n = std::min(a.path.size(), b.path.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = a.path[i] <=> b.path[i]; c != 0) return c;
  }
  return a.path.size() <=> b.path.size();
}

inline bool operator<(const LogootId& a, const LogootId& b) { return lid_compare(a, b) < 0; }

enum class AllocStrategy {
  boundary,  // new digit within 10 of the left bound
  random,    // uniform over the free interval
};

inline const char* to_string(AllocStrategy s) { return s == AllocStrategy::boundary ? "boundary" : "random"; }

// Deterministic across standard libraries (no std::uniform_int_distribution).
inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return n <= 1 ? 0 : rng() % n; }

// Allocates an id strictly between p and q.
//
// Walks down the levels while the candidate still equals p's (and/or q's)
// prefix. A fresh triple always gets a digit >= 1, so an id never ends in a
// digit-0 triple; that is what lets the walk stop below a tight q.
inline LogootId lid_between(const LogootId& p, const LogootId& q, SiteId site, std::uint64_t clock,
                            AllocStrategy strategy, std::mt19937_64& rng) {
  if (!(lid_compare(p, q) < 0)) throw OrderError("lid_between requires p < q");
  LogootId r;
  bool tight_p = true;
  bool tight_q = true;
  for (std::size_t i = 0;; ++i) {
    bool p_has = tight_p && i < p.path.size();
    bool q_has = tight_q && i < q.path.size();
    if (tight_q && !q_has) throw OrderError("allocation reached the end of the upper bound");
    std::uint64_t lo = p_has ? p.path[i].digit : 0;
    std::uint64_t hi = q_has ? q.path[i].digit : kLogootBase;
    if (hi > lo + 1) {
      std::uint64_t span = hi - lo - 1;
      if (strategy == AllocStrategy::boundary) span = std::min<std::uint64_t>(span, 10);
      auto digit = static_cast<std::uint32_t>(lo + 1 + draw(rng, span));
      r.path.push_back({digit, site, clock});
      return r;
    }
    if (p_has) {
      const auto& t = p.path[i];
      r.path.push_back(t);
      tight_q = q_has && t == q.path[i];
      continue;
    }
    // p is exhausted (or not tight) and q's digit here is 0 or 1.
    tight_p = false;
    const auto& t = q.path[i];
    if (t.digit == 1) {
      r.path.push_back({0, site, clock});
      tight_q = false;
    } else {
      r.path.push_back(t);  // digit 0 is never q's last triple
    }
  }
}

struct LogootWireOp {
  enum class Kind : std::uint8_t { insert, del };
  Kind kind = Kind::insert;
  LogootId id;
  char32_t ch = 0;
  SiteId site = 0;
  VectorClock clock;

  friend bool operator==(const LogootWireOp&, const LogootWireOp&) = default;
};

struct LogootMetrics {
  std::size_t visible = 0;  // C
  std::size_t triples = 0;  // total id triples, the space proxy
  std::size_t max_depth = 0;
};

class LogootReplica {
 public:
  struct Entry {
    LogootId id;
    char32_t ch;
  };
  struct Stats {
    std::uint64_t comparisons = 0;
    std::uint64_t last_comparisons = 0;
  };

  explicit LogootReplica(SiteId site = 0, AllocStrategy strategy = AllocStrategy::boundary, std::uint64_t seed = 0)
      : site_(site), strategy_(strategy), rng_(seed * 0x9E3779B97F4A7C15ull + site) {}

  // Shared initial text with deterministic reserved-site ids, evenly spread.
  void seed(const Text& text) {
    seq_.clear();
    std::uint64_t n = text.size();
    const std::uint64_t width = kLogootBase - 2;
    for (std::uint64_t i = 0; i < n; ++i) {
      LogootId id;
      if (n <= width) {
        id.path.push_back({static_cast<std::uint32_t>(1 + i * width / n), 0, i + 1});
      } else {
        id.path.push_back({static_cast<std::uint32_t>(1 + i / width), 0, 0});
        id.path.push_back({static_cast<std::uint32_t>(1 + i % width), 0, i + 1});
      }
      seq_.push_back({std::move(id), text[i]});
    }
  }

  SiteId site() const { return site_; }
  void set_site(SiteId site) {
    site_ = site;
    rng_.seed(rng_() + site);
  }
  AllocStrategy strategy() const { return strategy_; }
  const std::vector<Entry>& sequence() const { return seq_; }
  const VectorClock& delivered() const { return delivered_; }
  const Stats& stats() const { return stats_; }

  Text text() const {
    Text out;
    out.reserve(seq_.size());
    for (const auto& e : seq_) out.push_back(e.ch);
    return out;
  }

  LogootMetrics metrics_counts() const {
    LogootMetrics m;
    m.visible = seq_.size();
    for (const auto& e : seq_) {
      m.triples += e.id.path.size();
      m.max_depth = std::max(m.max_depth, e.id.path.size());
    }
    return m;
  }

  LogootWireOp gen_insert(std::size_t pos, char32_t ch) {
    if (pos > seq_.size()) throw RangeError("logoot insert position " + std::to_string(pos));
    LogootId lower = pos == 0 ? LogootId::min() : seq_[pos - 1].id;
    LogootId upper = pos == seq_.size() ? LogootId::max() : seq_[pos].id;
    LogootId id = lid_between(lower, upper, site_, ++clock_, strategy_, rng_);
    seq_.insert(seq_.begin() + static_cast<std::ptrdiff_t>(pos), Entry{id, ch});
    return LogootWireOp{LogootWireOp::Kind::insert, std::move(id), ch, site_, stamp()};
  }

  LogootWireOp gen_delete(std::size_t pos) {
    if (pos >= seq_.size()) throw RangeError("logoot delete position " + std::to_string(pos));
    LogootId id = std::move(seq_[pos].id);
    seq_.erase(seq_.begin() + static_cast<std::ptrdiff_t>(pos));
    return LogootWireOp{LogootWireOp::Kind::del, std::move(id), 0, site_, stamp()};
  }

  std::vector<EditOp> integrate(const LogootWireOp& w) {
    stats_.last_comparisons = 0;
    std::uint64_t seq_no = w.clock.get(w.site);
    if (seq_no > delivered_.get(w.site)) delivered_.set(w.site, seq_no);
    auto it = std::lower_bound(seq_.begin(), seq_.end(), w.id, [this](const Entry& e, const LogootId& id) {
      ++stats_.comparisons;
      ++stats_.last_comparisons;
      return lid_compare(e.id, id) < 0;
    });
    auto idx = static_cast<std::size_t>(it - seq_.begin());
    bool present = it != seq_.end() && (++stats_.comparisons, ++stats_.last_comparisons, it->id == w.id);
    if (w.kind == LogootWireOp::Kind::insert) {
      if (present) return {};
      seq_.insert(it, Entry{w.id, w.ch});
      return {EditOp::ins(idx, Text(1, w.ch), w.site, seq_no)};
    }
    if (!present) return {};
    seq_.erase(it);
    return {EditOp::del(idx, 1, w.site, seq_no)};
  }

 private:
  VectorClock stamp() {
    delivered_.tick(site_);
    return delivered_;
  }

  SiteId site_;
  AllocStrategy strategy_;
  std::mt19937_64 rng_;
  std::uint64_t clock_ = 0;
  std::vector<Entry> seq_;
  VectorClock delivered_;
  Stats stats_;
};

}  // namespace coedit
