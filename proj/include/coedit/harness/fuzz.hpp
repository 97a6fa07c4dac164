#pragma once

// Seeded random scenarios through the simulator, with greedy minimization of
// any failing script into a replayable witness.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "coedit/harness/search.hpp"
#include "coedit/harness/witness.hpp"
#include "coedit/sim.hpp"

namespace coedit {

struct FuzzTarget {
  EngineConfig engine;
  Topology topology = Topology::full_mesh;
  DeliveryPolicy policy = DeliveryPolicy::causal_order;

  std::string label() const {
    std::string s = describe(engine);
    if (policy != DeliveryPolicy::causal_order) s += std::string("+") + to_string(policy);
    return s;
  }
};

inline std::vector<FuzzTarget> default_fuzz_targets() {
  return {
      {{EngineKind::ot, TieBreakPolicy::site_order}},
      {{EngineKind::ot_server, TieBreakPolicy::site_order}, Topology::star_server},
      {{EngineKind::woot}},
      {{EngineKind::woot}, Topology::full_mesh, DeliveryPolicy::woot_precondition},
      {{EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::boundary}},
      {{EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::random}},
  };
}

struct FuzzOptions {
  std::size_t runs = 1000;
  std::uint32_t m = 3;
  std::size_t ops_per_site = 20;
  std::uint64_t seed = 1;
  std::uint64_t max_latency = 30;
  unsigned workers = 0;  // 0: COEDIT_WORKERS or hardware concurrency
};

struct FuzzTargetSummary {
  std::string label;
  FuzzTarget target;
  std::size_t runs = 0;
  std::size_t divergences = 0;
  std::size_t law_violations = 0;
  std::vector<std::uint64_t> failing_seeds;
  std::vector<Witness> witnesses;  // minimized, one per failing run
  bool witnesses_replay = true;
};

struct FuzzSummary {
  FuzzOptions options;
  std::vector<FuzzTargetSummary> targets;
};

// m sites, k ops each, spread over a time window short enough that many ops
// are concurrent under the latency model.
inline ScenarioScript random_script(std::uint64_t seed, std::uint32_t m, std::size_t k, std::uint64_t max_latency) {
  std::mt19937_64 rng(seed);
  ScenarioScript s;
  s.m = m;
  s.seed = seed;
  s.latency = LatencyModel::uniform(1, std::max<std::uint64_t>(1, max_latency));
  const char32_t alphabet[] = U"abcdefgh";
  auto pick = [&] { return alphabet[rng() % 8]; };
  for (std::size_t i = rng() % 6; i-- > 0;) s.initial.push_back(pick());
  std::uint64_t window = std::max<std::uint64_t>(1, k * 4);
  for (SiteId site = 1; site <= m; ++site) {
    for (std::size_t i = 0; i < k; ++i) {
      ScriptEvent ev;
      ev.time = rng() % window;
      ev.site = site;
      std::size_t pos = rng() % 24;
      if (rng() % 10 < 7) {
        Text t;
        for (std::size_t n = 1 + rng() % 3; n-- > 0;) t.push_back(pick());
        ev.intent = Intent::ins(pos, std::move(t));
      } else {
        ev.intent = Intent::del(pos, 1 + rng() % 2);
      }
      s.events.push_back(std::move(ev));
    }
  }
  std::stable_sort(s.events.begin(), s.events.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return s;
}

struct RunVerdict {
  std::optional<WitnessKind> failure;
  std::string note;
  std::vector<Text> texts;

  bool failed() const { return failure.has_value(); }
};

inline RunVerdict judge(const ScenarioResult& r) {
  RunVerdict v;
  v.texts = r.texts;
  if (r.server_text) v.texts.push_back(*r.server_text);
  if (!r.errors.empty()) {
    v.failure = WitnessKind::divergence;
    v.note = "engine error: " + r.errors.front();
    return v;
  }
  if (!check_convergence(r).converged) {
    v.failure = WitnessKind::divergence;
    v.note = "texts differ";
    return v;
  }
  for (const auto& m : r.metrics)
    if (!tombstone_law_holds(m, r.engine.kind)) {
      v.failure = WitnessKind::divergence;
      v.note = "tombstone counting law broken";
      return v;
    }
  return v;
}

inline RunVerdict run_and_judge(const ScenarioScript& script, const EngineConfig& engine) {
  return judge(run_scenario(script, engine));
}

inline ScenarioScript apply_target(ScenarioScript s, const FuzzTarget& t) {
  s.topology = t.topology;
  s.policy = t.policy;
  return s;
}

inline EngineConfig engine_for_run(const FuzzTarget& t, std::uint64_t seed) {
  EngineConfig e = t.engine;
  if (e.kind == EngineKind::logoot) e.seed = seed;
  return e;
}

// Drops one event at a time while the script keeps failing, until no single
// removal preserves the failure.
inline ScenarioScript minimize(ScenarioScript script, const EngineConfig& engine) {
  bool shrunk = true;
  while (shrunk) {
    shrunk = false;
    for (std::size_t i = 0; i < script.events.size(); ++i) {
      ScenarioScript trial = script;
      trial.events.erase(trial.events.begin() + static_cast<std::ptrdiff_t>(i));
      if (run_and_judge(trial, engine).failed()) {
        script = std::move(trial);
        shrunk = true;
        --i;
      }
    }
  }
  return script;
}

// Re-executes a witness; the verdict carries its classification, or none if
// the witness no longer fails.
inline RunVerdict replay(const Witness& w) {
  if (w.timed) return run_and_judge(*w.timed, w.engine);
  if (!w.concurrent) throw PreconditionError("witness carries no script");
  auto check = check_all_orders(*w.concurrent, w.engine, w.policy);
  RunVerdict v;
  if (!check.ok) {
    v.failure = check.kind;
    if (check.witness) {
      v.texts = check.witness->texts;
      v.note = check.witness->note;
    }
  }
  return v;
}

inline bool replays_identically(const Witness& w) {
  auto v = replay(w);
  return v.failure == std::optional<WitnessKind>(w.kind) && v.texts == w.texts;
}

inline unsigned worker_count(unsigned requested) {
  if (requested) return requested;
  if (const char* env = std::getenv("COEDIT_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on a small pool; callers write results by index
// so the merge order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline FuzzSummary fuzz_convergence(const std::vector<FuzzTarget>& targets, const FuzzOptions& opt) {
  FuzzSummary summary;
  summary.options = opt;
  unsigned workers = worker_count(opt.workers);
  for (const auto& target : targets) {
    FuzzTargetSummary ts;
    ts.label = target.label();
    ts.target = target;
    ts.runs = opt.runs;
    std::vector<RunVerdict> verdicts(opt.runs);
    parallel_for(opt.runs, workers, [&](std::size_t i) {
      std::uint64_t seed = opt.seed + i;
      auto script = apply_target(random_script(seed, opt.m, opt.ops_per_site, opt.max_latency), target);
      verdicts[i] = run_and_judge(script, engine_for_run(target, seed));
    });
    for (std::size_t i = 0; i < opt.runs; ++i) {
      if (!verdicts[i].failed()) continue;
      std::uint64_t seed = opt.seed + i;
      if (verdicts[i].note.find("law") != std::string::npos) ++ts.law_violations;
      else ++ts.divergences;
      ts.failing_seeds.push_back(seed);

      EngineConfig engine = engine_for_run(target, seed);
      auto small = minimize(apply_target(random_script(seed, opt.m, opt.ops_per_site, opt.max_latency), target),
                            engine);
      auto v = run_and_judge(small, engine);
      Witness w;
      w.kind = *v.failure;
      w.engine = engine;
      w.policy = target.policy;
      w.timed = small;
      w.texts = v.texts;
      w.note = v.note + " (fuzz seed " + std::to_string(seed) + ")";
      ts.witnesses_replay = ts.witnesses_replay && replays_identically(w);
      ts.witnesses.push_back(std::move(w));
    }
    summary.targets.push_back(std::move(ts));
  }
  return summary;
}

inline void to_json(json& j, const FuzzTargetSummary& s) {
  j = {{"target", s.label},
       {"engine", s.target.engine},
       {"topology", to_string(s.target.topology)},
       {"policy", to_string(s.target.policy)},
       {"runs", s.runs},
       {"divergences", s.divergences},
       {"law_violations", s.law_violations},
       {"failing_seeds", s.failing_seeds},
       {"witnesses", s.witnesses},
       {"witnesses_replay", s.witnesses_replay}};
}

inline void to_json(json& j, const FuzzSummary& s) {
  j = {{"runs", s.options.runs},
       {"m", s.options.m},
       {"ops_per_site", s.options.ops_per_site},
       {"seed", s.options.seed},
       {"max_latency", s.options.max_latency},
       {"targets", s.targets}};
}

}  // namespace coedit
