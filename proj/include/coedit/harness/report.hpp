#pragma once

// JSON shapes for harness reports. Every report echoes the configuration it
// ran with so a file on its own is enough to rerun it.

#include "coedit/harness/bench.hpp"
#include "coedit/harness/fuzz.hpp"
#include "coedit/harness/search.hpp"

namespace coedit {

inline void to_json(json& j, const ScriptSpace& s) {
  j = {{"max_ops", s.max_ops}, {"doc_len", s.doc_len}, {"alphabet", to_utf8(s.alphabet)}};
}

inline void from_json(const json& j, ScriptSpace& s) {
  s = {};
  s.max_ops = j.value("max_ops", s.max_ops);
  s.doc_len = j.value("doc_len", s.doc_len);
  s.alphabet = from_utf8(j.value("alphabet", std::string("ab")));
}

inline void to_json(json& j, const ExhaustiveReport& r) {
  j = {{"engine", r.engine},       {"policy", to_string(r.policy)},
       {"scripts", r.scripts},     {"site_orders", r.site_orders},
       {"interleavings", r.interleavings}, {"failures", r.failures},
       {"witnesses", r.witnesses}, {"seconds", r.seconds}};
}

inline void to_json(json& j, const Tp1Report& r) {
  j = {{"tie", to_string(r.policy)}, {"docs", r.docs}, {"pairs", r.pairs}, {"failures", r.failures},
       {"first_failure", r.first_failure ? json(*r.first_failure) : json(nullptr)}};
}

inline void to_json(json& j, const FtSearchReport& r) {
  j = {{"tie", to_string(r.policy)},
       {"space", r.space},
       {"scripts", r.scripts},
       {"divergent", r.divergent},
       {"total_witnesses", r.total_witnesses},
       {"pairwise_clean", r.pairwise_clean},
       {"witnesses", r.witnesses}};
}

inline void to_json(json& j, const InterleavingRun& r) {
  j = {{"seed", r.seed},
       {"text", to_utf8(r.text)},
       {"converged", r.converged},
       {"contiguous_a", r.contiguous_a},
       {"contiguous_b", r.contiguous_b}};
}

inline void to_json(json& j, const InterleavingReport& r) {
  j = {{"engine", r.engine},
       {"word_a", to_utf8(r.word_a)},
       {"word_b", to_utf8(r.word_b)},
       {"runs", r.runs.size()},
       {"non_contiguous", r.non_contiguous},
       {"diverged", r.diverged},
       {"outcomes", r.runs}};
}

inline void to_json(json& j, const ScalingVerdict& v) { j = {{"ok", v.ok}, {"detail", v.detail}}; }

}  // namespace coedit
