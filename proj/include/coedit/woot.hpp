#pragma once

// WOOT: tombstone-based sequence CRDT. Characters are never removed, only
// hidden; inserts carry the ids of their neighbours at generation time and
// are placed among concurrent siblings by the recursive WOOT ordering.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "coedit/core.hpp"

namespace coedit {

struct WId {
  SiteId site = 0;
  std::uint64_t clock = 0;

  static constexpr WId begin() { return {0, 0}; }
  static constexpr WId end() { return {0, 1}; }
  bool is_sentinel() const { return site == 0 && clock < 2; }

  friend bool operator==(const WId&, const WId&) = default;
  // Sibling order used by integration: (site, clock).
  friend auto operator<=>(const WId&, const WId&) = default;
};

struct WIdHash {
  std::size_t operator()(const WId& id) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(id.site) << 40) ^ id.clock);
  }
};

struct WChar {
  WId id;
  char32_t ch = 0;
  bool visible = true;
  WId prev;
  WId next;

  friend bool operator==(const WChar&, const WChar&) = default;
};

struct WootWireOp {
  enum class Kind : std::uint8_t { insert, del };
  Kind kind = Kind::insert;
  WChar ch;      // insert
  WId target;    // delete
  SiteId site = 0;
  VectorClock clock;

  friend bool operator==(const WootWireOp&, const WootWireOp&) = default;
};

struct WootMetrics {
  std::size_t visible = 0;  // C
  std::size_t total = 0;    // C_t, sentinels included
};

// The object sequence plus the replica bookkeeping around it.
class WootReplica {
 public:
  struct Stats {
    std::uint64_t visits = 0;             // objects inspected, cumulative
    std::uint64_t last_visits = 0;        // for the most recent integrate/generate
    std::uint64_t check_visits = 0;       // spent in is_executable
    std::uint64_t inserts_integrated = 0;
    std::uint64_t deleted_ids = 0;
  };

  explicit WootReplica(SiteId site = 0) : site_(site) {
    seq_.push_back(WChar{WId::begin(), 0, false, WId::begin(), WId::end()});
    seq_.push_back(WChar{WId::end(), 0, false, WId::begin(), WId::end()});
  }

  // Shared initial text: chars with reserved site-0 ids chained left to right.
  void seed(const Text& text) {
    seq_.erase(seq_.begin() + 1, seq_.end() - 1);
    WId prev = WId::begin();
    for (std::size_t i = 0; i < text.size(); ++i) {
      WId id{0, 2 + i};
      seq_.insert(seq_.end() - 1, WChar{id, text[i], true, prev, WId::end()});
      prev = id;
    }
    seeded_ = text.size();
  }

  SiteId site() const { return site_; }
  void set_site(SiteId site) { site_ = site; }
  const std::vector<WChar>& sequence() const { return seq_; }
  const VectorClock& delivered() const { return delivered_; }
  const Stats& stats() const { return stats_; }

  Text text() const {
    Text out;
    for (const auto& c : seq_)
      if (c.visible) out.push_back(c.ch);
    return out;
  }

  WootMetrics metrics_counts() const {
    WootMetrics m;
    m.total = seq_.size();
    for (const auto& c : seq_)
      if (c.visible) ++m.visible;
    return m;
  }

  std::size_t inserts_integrated() const { return stats_.inserts_integrated + seeded_; }
  std::size_t deleted_ids() const { return stats_.deleted_ids; }

  WootWireOp gen_insert(std::size_t pos, char32_t ch) {
    stats_.last_visits = 0;
    std::size_t visible = 0;
    std::size_t prev_idx = 0;  // BEGIN
    std::size_t next_idx = seq_.size() - 1;  // END
    bool found_next = false;
    for (std::size_t i = 1; i + 1 < seq_.size(); ++i) {
      visit();
      if (!seq_[i].visible) continue;
      if (visible < pos) {
        prev_idx = i;
      } else {
        next_idx = i;
        found_next = true;
        break;
      }
      ++visible;
    }
    if (!found_next && visible != pos) throw RangeError("woot insert position " + std::to_string(pos));
    WChar c{WId{site_, ++clock_}, ch, true, seq_[prev_idx].id, seq_[next_idx].id};
    integrate_insert(c, prev_idx, next_idx);
    ++stats_.inserts_integrated;
    return WootWireOp{WootWireOp::Kind::insert, c, {}, site_, stamp()};
  }

  WootWireOp gen_delete(std::size_t pos) {
    stats_.last_visits = 0;
    std::size_t visible = 0;
    for (std::size_t i = 1; i + 1 < seq_.size(); ++i) {
      visit();
      if (!seq_[i].visible) continue;
      if (visible == pos) {
        seq_[i].visible = false;
        ++stats_.deleted_ids;
        return WootWireOp{WootWireOp::Kind::del, {}, seq_[i].id, site_, stamp()};
      }
      ++visible;
    }
    throw RangeError("woot delete position " + std::to_string(pos));
  }

  bool contains(const WId& id) const { return index_of(id) != npos; }

  bool is_executable(const WootWireOp& w) const {
    std::uint64_t before = stats_.visits;
    bool ok = w.kind == WootWireOp::Kind::insert ? contains(w.ch.prev) && contains(w.ch.next) : contains(w.target);
    stats_.check_visits += stats_.visits - before;
    return ok;
  }

  // Integrates an executable remote op and returns its position-based effect.
  std::vector<EditOp> integrate(const WootWireOp& w) {
    stats_.last_visits = 0;
    if (!is_executable(w)) throw PreconditionError("woot op not executable");
    std::vector<EditOp> out;
    if (w.kind == WootWireOp::Kind::insert) {
      if (contains(w.ch.id)) return out;
      std::size_t p = index_of(w.ch.prev);
      std::size_t n = index_of(w.ch.next);
      std::size_t at = integrate_insert(w.ch, p, n);
      ++stats_.inserts_integrated;
      out.push_back(EditOp::ins(visible_before(at), Text(1, w.ch.ch), w.site, w.clock.get(w.site)));
    } else {
      std::size_t at = index_of(w.target);
      if (seq_[at].visible) {
        seq_[at].visible = false;
        ++stats_.deleted_ids;
        out.push_back(EditOp::del(visible_before(at), 1, w.site, w.clock.get(w.site)));
      }
    }
    if (w.clock.get(w.site) > delivered_.get(w.site)) delivered_.set(w.site, w.clock.get(w.site));
    return out;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void visit() const {
    ++stats_.visits;
    ++stats_.last_visits;
  }

  VectorClock stamp() {
    delivered_.tick(site_);
    return delivered_;
  }

  std::size_t index_of(const WId& id) const {
    for (std::size_t i = 0; i < seq_.size(); ++i) {
      visit();
      if (seq_[i].id == id) return i;
    }
    return npos;
  }

  std::size_t visible_before(std::size_t idx) const {
    std::size_t count = 0;
    for (std::size_t i = 1; i < idx; ++i) {
      visit();
      if (seq_[i].visible) ++count;
    }
    return count;
  }

  // Places `c` strictly between indices `lo` and `hi`; returns its index.
  std::size_t integrate_insert(const WChar& c, std::size_t lo, std::size_t hi) {
    while (true) {
      if (hi - lo == 1) {
        seq_.insert(seq_.begin() + static_cast<std::ptrdiff_t>(hi), c);
        return hi;
      }
      std::unordered_set<WId, WIdHash> inside;
      for (std::size_t i = lo + 1; i < hi; ++i) {
        visit();
        inside.insert(seq_[i].id);
      }
      // Candidates: chars in the range whose own anchors lie outside it.
      std::vector<std::size_t> order{lo};
      for (std::size_t i = lo + 1; i < hi; ++i) {
        visit();
        if (!inside.count(seq_[i].prev) && !inside.count(seq_[i].next)) order.push_back(i);
      }
      order.push_back(hi);
      std::size_t k = 1;
      while (k < order.size() - 1 && seq_[order[k]].id < c.id) ++k;
      lo = order[k - 1];
      hi = order[k];
    }
  }

  SiteId site_;
  std::uint64_t clock_ = 0;
  std::size_t seeded_ = 0;
  std::vector<WChar> seq_;
  VectorClock delivered_;
  mutable Stats stats_;
};

}  // namespace coedit
