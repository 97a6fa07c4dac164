#pragma once

// Exhaustive searches over small concurrent scripts: convergence of every
// engine across all delivery orders, the TP1 check on primitive transforms,
// the FT puzzle search, and the concurrent-insert interleaving scenario.

#include <chrono>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coedit/harness/witness.hpp"
#include "coedit/sim.hpp"

namespace coedit {

// ---------------------------------------------------------------------------
// Script space

struct ScriptSpace {
  std::size_t max_ops = 3;
  std::size_t doc_len = 3;
  Text alphabet = U"ab";
};

inline std::vector<Text> all_texts(const Text& alphabet, std::size_t max_len) {
  std::vector<Text> out{Text{}};
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].size() < max_len)
      for (char32_t c : alphabet) out.push_back(out[i] + c);
  return out;
}

// Single-character inserts and deletes valid on a view of length `len`.
inline std::vector<Intent> intents_for(std::size_t len, const Text& alphabet) {
  std::vector<Intent> out;
  for (std::size_t p = 0; p <= len; ++p)
    for (char32_t c : alphabet) out.push_back(Intent::ins(p, Text(1, c)));
  for (std::size_t p = 0; p < len; ++p) out.push_back(Intent::del(p));
  return out;
}

// Calls `visit` with every concurrent script in the space. Ops sit on
// distinct sites, except one layout per size >= 3 that gives site 1 two
// consecutive ops. One extra site only observes.
inline void for_each_script(const ScriptSpace& space, const std::function<void(const ConcurrentScript&)>& visit) {
  for (const Text& doc : all_texts(space.alphabet, space.doc_len)) {
    for (std::size_t n = 1; n <= space.max_ops; ++n) {
      std::vector<std::vector<SiteId>> layouts;
      std::vector<SiteId> distinct;
      for (std::size_t i = 0; i < n; ++i) distinct.push_back(static_cast<SiteId>(i + 1));
      layouts.push_back(distinct);
      if (n >= 3) {
        std::vector<SiteId> shared{1, 1};
        for (std::size_t i = 2; i < n; ++i) shared.push_back(static_cast<SiteId>(i));
        layouts.push_back(shared);
      }
      for (const auto& sites : layouts) {
        SiteId m = *std::max_element(sites.begin(), sites.end()) + 1;
        ConcurrentScript script;
        script.m = m;
        script.initial = doc;
        std::vector<std::size_t> view(m + 1, doc.size());
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
          if (i == n) {
            visit(script);
            return;
          }
          SiteId s = sites[i];
          std::size_t len = view[s];
          for (const auto& in : intents_for(len, space.alphabet)) {
            script.ops.emplace_back(s, in);
            view[s] = in.kind == EditOp::Kind::insert ? len + 1 : len - 1;
            rec(i + 1);
            view[s] = len;
            script.ops.pop_back();
          }
        };
        rec(0);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Convergence over all delivery orders

struct ConvergenceCheck {
  bool ok = true;
  WitnessKind kind = WitnessKind::divergence;
  std::size_t site_orders = 0;     // delivery orders executed, summed over sites
  std::size_t interleavings = 0;   // combinations of per-site orders
  std::optional<Witness> witness;
};

inline bool tombstone_law_holds(const std::map<std::string, double>& m, EngineKind kind) {
  if (kind == EngineKind::woot) {
    double ct = m.at("C_t"), c = m.at("C");
    return ct == m.at("inserts") + 2 && c == ct - 2 - m.at("deleted_ids");
  }
  return true;
}

// Checks one script against one engine: every site, every admissible order.
inline ConvergenceCheck check_all_orders(const ConcurrentScript& script, const EngineConfig& engine,
                                         DeliveryPolicy policy = DeliveryPolicy::causal_order) {
  ConvergenceCheck out;
  if (engine.kind == EngineKind::ot_server) {
    auto results = enumerate_server_orders(script, engine);
    out.site_orders = out.interleavings = results.size();
    for (const auto& r : results) {
      if (check_convergence(r).converged) continue;
      out.ok = false;
      Witness w;
      w.kind = WitnessKind::divergence;
      w.engine = engine;
      w.policy = policy;
      w.concurrent = script;
      std::vector<std::pair<SiteId, std::uint64_t>> arrival;
      for (const auto& ev : r.trace)
        if (ev.kind == TraceEvent::Kind::relay) arrival.emplace_back(ev.origin, ev.seq);
      w.orders.push_back(std::move(arrival));
      w.texts = r.texts;
      w.texts.push_back(*r.server_text);
      w.note = "last text is the server's";
      out.witness = std::move(w);
      return out;
    }
    return out;
  }

  auto outcomes = enumerate_site_outcomes(script, engine, policy);
  out.interleavings = 1;
  const SiteOutcome* ref = nullptr;
  for (const auto& site : outcomes) {
    out.site_orders += site.size();
    out.interleavings *= site.size();
  }
  auto fail = [&](WitnessKind kind, const SiteOutcome& a, SiteId sa, const SiteOutcome& b, SiteId sb,
                  std::string note) {
    out.ok = false;
    out.kind = kind;
    Witness w;
    w.kind = kind;
    w.engine = engine;
    w.policy = policy;
    w.concurrent = script;
    w.orders.resize(script.m);
    w.orders[sa - 1] = a.order;
    w.orders[sb - 1] = b.order;
    w.texts.assign(script.m, Text{});
    w.texts[sa - 1] = a.text;
    w.texts[sb - 1] = b.text;
    w.note = std::move(note);
    out.witness = std::move(w);
  };
  SiteId ref_site = 0;
  for (SiteId s = 1; s <= script.m; ++s) {
    for (const auto& o : outcomes[s - 1]) {
      if (o.error) {
        fail(WitnessKind::divergence, o, s, o, s, "site " + std::to_string(s) + ": " + *o.error);
        return out;
      }
      if (!tombstone_law_holds(o.metrics, engine.kind)) {
        fail(WitnessKind::divergence, o, s, o, s, "tombstone counting law broken");
        return out;
      }
      if (!ref) {
        ref = &o;
        ref_site = s;
        continue;
      }
      if (o.text != ref->text) {
        fail(WitnessKind::divergence, *ref, ref_site, o, s, "texts differ");
        return out;
      }
      if (o.fingerprint != ref->fingerprint) {
        fail(WitnessKind::order_violation, *ref, ref_site, o, s, "same text, different element order");
        return out;
      }
    }
  }
  return out;
}

struct ExhaustiveReport {
  EngineConfig engine;
  DeliveryPolicy policy = DeliveryPolicy::causal_order;
  std::size_t scripts = 0;
  std::size_t site_orders = 0;
  std::size_t interleavings = 0;
  std::size_t failures = 0;
  std::vector<Witness> witnesses;  // first few only
  double seconds = 0;
};

inline ExhaustiveReport exhaustive_convergence(const ScriptSpace& space, const EngineConfig& engine,
                                               DeliveryPolicy policy = DeliveryPolicy::causal_order,
                                               std::size_t keep = 5) {
  auto t0 = std::chrono::steady_clock::now();
  ExhaustiveReport rep;
  rep.engine = engine;
  rep.policy = policy;
  for_each_script(space, [&](const ConcurrentScript& s) {
    auto c = check_all_orders(s, engine, policy);
    ++rep.scripts;
    rep.site_orders += c.site_orders;
    rep.interleavings += c.interleavings;
    if (!c.ok) {
      ++rep.failures;
      if (rep.witnesses.size() < keep) rep.witnesses.push_back(*c.witness);
    }
  });
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// TP1 on primitive transforms

struct Tp1Report {
  TieBreakPolicy policy = TieBreakPolicy::site_order;
  std::size_t docs = 0;
  std::size_t pairs = 0;
  std::size_t failures = 0;
  std::optional<std::string> first_failure;
};

inline Tp1Report check_tp1(std::size_t doc_len, const Text& alphabet, TieBreakPolicy policy) {
  Tp1Report rep;
  rep.policy = policy;
  auto ops_on = [&](const Text& d, SiteId site) {
    std::vector<EditOp> out;
    std::vector<Text> contents;
    for (const Text& t : all_texts(alphabet, 2))
      if (!t.empty()) contents.push_back(t);
    for (std::size_t p = 0; p <= d.size(); ++p)
      for (const auto& c : contents) out.push_back(EditOp::ins(p, c, site, 1));
    for (std::size_t p = 0; p < d.size(); ++p)
      for (std::size_t n = 1; p + n <= d.size(); ++n) out.push_back(EditOp::del(p, n, site, 1));
    return out;
  };
  for (const Text& d : all_texts(alphabet, doc_len)) {
    ++rep.docs;
    auto xs = ops_on(d, 1), ys = ops_on(d, 2);
    for (const auto& x : xs)
      for (const auto& y : ys) {
        ++rep.pairs;
        Text via_x = d, via_y = d;
        apply_ops(via_x, {x});
        apply_ops(via_x, it_transform(y, x, policy));
        apply_ops(via_y, {y});
        apply_ops(via_y, it_transform(x, y, policy));
        if (via_x == via_y) continue;
        ++rep.failures;
        if (!rep.first_failure) {
          std::ostringstream msg;
          msg << "\"" << to_utf8(d) << "\" " << x << " || " << y << " -> \"" << to_utf8(via_x) << "\" vs \""
              << to_utf8(via_y) << "\"";
          rep.first_failure = msg.str();
        }
      }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// FT puzzle

struct FtSearchReport {
  TieBreakPolicy policy = TieBreakPolicy::site_order;
  ScriptSpace space;
  std::size_t scripts = 0;
  std::map<std::string, std::size_t> divergent;  // per OT mode
  std::vector<Witness> witnesses;                // capped
  std::size_t total_witnesses = 0;
  // Three-op witnesses whose two-op sub-scripts all converge: the tie only
  // goes wrong once a third op has shifted positions.
  std::size_t pairwise_clean = 0;
};

inline bool pairwise_convergent(const ConcurrentScript& s, const EngineConfig& engine) {
  for (std::size_t skip = 0; skip < s.ops.size(); ++skip) {
    ConcurrentScript sub = s;
    sub.ops.erase(sub.ops.begin() + static_cast<std::ptrdiff_t>(skip));
    if (!check_all_orders(sub, engine).ok) return false;
  }
  return true;
}

// Runs both OT modes over the space under one tie-break policy and keeps
// every divergence as a witness (up to `keep`).
inline FtSearchReport search_ft_puzzle(const ScriptSpace& space, TieBreakPolicy policy, std::size_t keep = 100) {
  FtSearchReport rep;
  rep.policy = policy;
  rep.space = space;
  rep.divergent["ot"] = 0;
  rep.divergent["ot-server"] = 0;
  EngineConfig dist{EngineKind::ot, policy};
  EngineConfig server{EngineKind::ot_server, policy};
  for_each_script(space, [&](const ConcurrentScript& s) {
    if (s.ops.size() < 2) return;  // nothing concurrent
    ++rep.scripts;
    for (const auto* engine : {&dist, &server}) {
      auto c = check_all_orders(s, *engine);
      if (c.ok) continue;
      ++rep.divergent[to_string(engine->kind)];
      ++rep.total_witnesses;
      Witness w = *c.witness;
      if (s.ops.size() == 3 && pairwise_convergent(s, *engine)) {
        ++rep.pairwise_clean;
        w.note += w.note.empty() ? "" : "; ";
        w.note += "every two-op sub-script converges";
      }
      if (rep.witnesses.size() < keep) rep.witnesses.push_back(std::move(w));
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Concurrent-insert interleaving

struct InterleavingRun {
  std::uint64_t seed = 0;
  Text text;
  bool converged = true;
  bool contiguous_a = true;
  bool contiguous_b = true;
};

struct InterleavingReport {
  EngineConfig engine;
  Text word_a, word_b;
  std::vector<InterleavingRun> runs;
  std::size_t non_contiguous = 0;
  std::size_t diverged = 0;
};

// Two sites insert their words at position 0 of an empty document at the
// same instant; CRDT engines split each word into left-to-right char ops.
inline InterleavingReport scenario_interleaving(const Text& word_a, const Text& word_b, EngineConfig engine,
                                                std::size_t seeds = 100, std::uint64_t first_seed = 0) {
  if (word_a.empty() || word_b.empty()) throw ConfigError("interleaving words must be non-empty");
  InterleavingReport rep;
  rep.engine = engine;
  rep.word_a = word_a;
  rep.word_b = word_b;
  for (std::uint64_t seed = first_seed; seed < first_seed + seeds; ++seed) {
    ScenarioScript s;
    s.m = 2;
    s.seed = seed;
    s.latency = LatencyModel::uniform(1, 50);
    if (engine.kind == EngineKind::ot_server) s.topology = Topology::star_server;
    s.events = {{0, 1, Intent::ins(0, word_a)}, {0, 2, Intent::ins(0, word_b)}};
    EngineConfig e = engine;
    e.seed = seed;
    auto r = run_scenario(s, e);
    InterleavingRun run;
    run.seed = seed;
    run.text = r.texts[0];
    run.converged = check_convergence(r).converged;
    run.contiguous_a = run.text.find(word_a) != Text::npos;
    run.contiguous_b = run.text.find(word_b) != Text::npos;
    if (!run.converged) ++rep.diverged;
    if (!run.contiguous_a || !run.contiguous_b) ++rep.non_contiguous;
    rep.runs.push_back(std::move(run));
  }
  return rep;
}

}  // namespace coedit
