#pragma once

// Shared document/operation model: position-based edits, vector clocks and
// causal readiness. Everything here is a plain value type.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

#include "coedit/errors.hpp"

namespace coedit {

using SiteId = std::uint32_t;
using Text = std::u32string;  // Unicode scalar values; positions index into this

// ---------------------------------------------------------------------------
// UTF-8 <-> UTF-32. Invalid input bytes decode to U+FFFD.

inline std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    auto u = static_cast<std::uint32_t>(c);
    if (u > 0x10FFFF || (u >= 0xD800 && u <= 0xDFFF)) u = 0xFFFD;
    if (u < 0x80) {
      out.push_back(static_cast<char>(u));
    } else if (u < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (u >> 6)));
      out.push_back(static_cast<char>(0x80 | (u & 0x3F)));
    } else if (u < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (u >> 12)));
      out.push_back(static_cast<char>(0x80 | ((u >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (u & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (u >> 18)));
      out.push_back(static_cast<char>(0x80 | ((u >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((u >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (u & 0x3F)));
    }
  }
  return out;
}

inline Text from_utf8(std::string_view bytes) {
  Text out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    auto b = static_cast<unsigned char>(bytes[i]);
    std::uint32_t cp = 0xFFFD;
    std::size_t extra = 0;
    if (b < 0x80) {
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      cp = b & 0x1F;
      extra = 1;
    } else if ((b & 0xF0) == 0xE0) {
      cp = b & 0x0F;
      extra = 2;
    } else if ((b & 0xF8) == 0xF0) {
      cp = b & 0x07;
      extra = 3;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + extra >= bytes.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k <= extra; ++k) {
      auto cb = static_cast<unsigned char>(bytes[i + k]);
      if ((cb & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cb & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(static_cast<char32_t>(cp));
    i += extra + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// EditOp: the external, position-based operation form.

struct EditOp {
  enum class Kind : std::uint8_t { insert, del };

  Kind kind = Kind::insert;
  std::size_t pos = 0;
  Text content;             // insert only
  std::size_t length = 0;   // delete only
  SiteId site = 0;
  std::uint64_t seq = 0;    // 1-based per-site local sequence number

  static EditOp ins(std::size_t pos, Text content, SiteId site = 0, std::uint64_t seq = 0) {
    EditOp op;
    op.kind = Kind::insert;
    op.pos = pos;
    op.content = std::move(content);
    op.site = site;
    op.seq = seq;
    return op;
  }

  static EditOp del(std::size_t pos, std::size_t length, SiteId site = 0, std::uint64_t seq = 0) {
    EditOp op;
    op.kind = Kind::del;
    op.pos = pos;
    op.length = length;
    op.site = site;
    op.seq = seq;
    return op;
  }

  // Zero-effect marker produced when a delete is swallowed by another delete.
  static EditOp noop(SiteId site = 0, std::uint64_t seq = 0) { return del(0, 0, site, seq); }

  bool is_insert() const { return kind == Kind::insert; }
  bool is_delete() const { return kind == Kind::del; }
  bool is_noop() const { return kind == Kind::del && length == 0; }
  std::size_t span() const { return is_insert() ? content.size() : length; }

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const EditOp& op) {
  if (op.is_insert())
    os << "ins(" << op.pos << ",\"" << to_utf8(op.content) << "\"";
  else
    os << "del(" << op.pos << "," << op.length;
  return os << ",s" << op.site << "#" << op.seq << ")";
}

// ---------------------------------------------------------------------------
// VectorClock. Absent sites count as zero; zero entries are never stored so
// that equal clocks compare equal structurally.

class VectorClock {
 public:
  VectorClock() = default;
  VectorClock(std::initializer_list<std::pair<const SiteId, std::uint64_t>> init) {
    for (auto [s, v] : init) set(s, v);
  }

  std::uint64_t get(SiteId site) const {
    auto it = counters_.find(site);
    return it == counters_.end() ? 0 : it->second;
  }
  std::uint64_t operator[](SiteId site) const { return get(site); }

  void set(SiteId site, std::uint64_t value) {
    if (value == 0)
      counters_.erase(site);
    else
      counters_[site] = value;
  }

  std::uint64_t tick(SiteId site) {
    auto& v = counters_[site];
    return ++v;
  }

  void merge(const VectorClock& other) {
    for (auto [s, v] : other.counters_)
      if (v > get(s)) counters_[s] = v;
  }

  // Total number of operations covered by the clock.
  std::uint64_t sum() const {
    std::uint64_t total = 0;
    for (auto [s, v] : counters_) total += v;
    return total;
  }

  bool dominated_by(const VectorClock& other) const {
    for (auto [s, v] : counters_)
      if (v > other.get(s)) return false;
    return true;
  }

  const std::map<SiteId, std::uint64_t>& entries() const { return counters_; }

  friend bool operator==(const VectorClock&, const VectorClock&) = default;
  friend auto operator<=>(const VectorClock& a, const VectorClock& b) { return a.counters_ <=> b.counters_; }

 private:
  std::map<SiteId, std::uint64_t> counters_;
};

inline std::ostream& operator<<(std::ostream& os, const VectorClock& vc) {
  os << "{";
  bool first = true;
  for (auto [s, v] : vc.entries()) {
    os << (first ? "" : ",") << s << ":" << v;
    first = false;
  }
  return os << "}";
}

enum class CausalOrder { before, after, concurrent, equal };

inline const char* to_string(CausalOrder o) {
  switch (o) {
    case CausalOrder::before: return "before";
    case CausalOrder::after: return "after";
    case CausalOrder::concurrent: return "concurrent";
    case CausalOrder::equal: return "equal";
  }
  return "?";
}

inline CausalOrder vc_compare(const VectorClock& a, const VectorClock& b) {
  bool a_le_b = a.dominated_by(b);
  bool b_le_a = b.dominated_by(a);
  if (a_le_b && b_le_a) return CausalOrder::equal;
  if (a_le_b) return CausalOrder::before;
  if (b_le_a) return CausalOrder::after;
  return CausalOrder::concurrent;
}

// True iff the op stamped `op_clock` from `op_site` is the next one from that
// site and all its other dependencies were already delivered.
inline bool causally_ready(const VectorClock& op_clock, SiteId op_site, const VectorClock& delivered) {
  if (op_clock.get(op_site) != delivered.get(op_site) + 1) return false;
  for (auto [s, v] : op_clock.entries())
    if (s != op_site && v > delivered.get(s)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Document

struct Document {
  Text text;
  VectorClock version;

  friend bool operator==(const Document&, const Document&) = default;
};

// Splices `op` into `text` in place and returns the inverse edit.
inline EditOp apply_text(Text& text, const EditOp& op) {
  if (op.is_insert()) {
    if (op.pos > text.size())
      throw RangeError("insert at " + std::to_string(op.pos) + " beyond length " + std::to_string(text.size()));
    text.insert(op.pos, op.content);
    return EditOp::del(op.pos, op.content.size(), op.site, op.seq);
  }
  if (op.pos > text.size() || op.length > text.size() - op.pos)
    throw RangeError("delete [" + std::to_string(op.pos) + "," + std::to_string(op.pos + op.length) +
                     ") beyond length " + std::to_string(text.size()));
  Text removed = text.substr(op.pos, op.length);
  text.erase(op.pos, op.length);
  return EditOp::ins(op.pos, std::move(removed), op.site, op.seq);
}

inline Document apply_edit(Document doc, const EditOp& op) {
  apply_text(doc.text, op);
  doc.version.tick(op.site);
  return doc;
}

}  // namespace coedit
