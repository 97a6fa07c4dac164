// Acceptance gate: one PASS/FAIL line per criterion, exit 0 only if all pass.
// Optional argument: path for a JSON summary.

#include <fstream>
#include <iostream>

#include "coedit/harness/report.hpp"
#include "coedit/relay/e2e.hpp"

using namespace coedit;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 1) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

Outcome exhaustive_oracle() {
  auto t0 = Clock::now();
  std::size_t scripts = 0, failures = 0, orders = 0;
  for (EngineConfig e : {EngineConfig{EngineKind::ot, TieBreakPolicy::site_order}, EngineConfig{EngineKind::woot},
                         EngineConfig{EngineKind::logoot}}) {
    auto rep = exhaustive_convergence(ScriptSpace{}, e);
    scripts += rep.scripts;
    failures += rep.failures;
    orders += rep.interleavings;
  }
  double s = seconds_since(t0);
  return {failures == 0 && s < 60, std::to_string(scripts) + " scripts, " + std::to_string(orders) +
                                       " interleavings, " + std::to_string(failures) + " failures, " + fmt(s) + " s"};
}

Outcome tp1() {
  auto rep = check_tp1(3, U"ab", TieBreakPolicy::site_order);
  return {rep.failures == 0 && rep.pairs > 0,
          std::to_string(rep.pairs) + " pairs on " + std::to_string(rep.docs) + " docs, " +
              std::to_string(rep.failures) + " failures"};
}

Outcome ft_puzzle() {
  auto naive = search_ft_puzzle(ScriptSpace{}, TieBreakPolicy::naive_left, 5);
  auto site = search_ft_puzzle(ScriptSpace{}, TieBreakPolicy::site_order, 5);
  bool replay = true;
  for (const auto& w : naive.witnesses) replay = replay && replays_identically(w);
  return {naive.total_witnesses >= 1 && site.total_witnesses == 0 && replay,
          "naive-left " + std::to_string(naive.total_witnesses) + " witnesses (" +
              std::to_string(naive.pairwise_clean) + " need all three ops), site-order " +
              std::to_string(site.total_witnesses)};
}

Outcome interleaving() {
  auto run = [](EngineConfig e) { return scenario_interleaving(U"Alice", U"Bob", e, 100).non_contiguous; };
  auto logoot = run({EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::random});
  auto ot = run({EngineKind::ot, TieBreakPolicy::site_order});
  auto woot = run({EngineKind::woot});
  return {logoot >= 1 && ot == 0 && woot == 0, "non-contiguous in 100: logoot/random " + std::to_string(logoot) +
                                                  ", ot " + std::to_string(ot) + ", woot " + std::to_string(woot)};
}

Outcome tombstone_law(const FuzzSummary& fuzz) {
  std::size_t records = 0, bad = 0;
  for (EngineConfig e : {EngineConfig{EngineKind::woot}, EngineConfig{EngineKind::logoot}}) {
    for (const auto& r : bench_tombstone_sweep(1000, {0, 0.25, 0.5, 0.75, 0.9}, e)) {
      ++records;
      if (!tombstone_law_holds(r)) ++bad;
    }
    for (std::size_t n : {1, 7, 64})
      for (double f : {0.0, 0.5, 1.0}) {
        ++records;
        if (!tombstone_law_holds(bench_tombstone(n, f, e).front())) ++bad;
      }
  }
  std::size_t fuzz_runs = 0, fuzz_bad = 0;
  for (const auto& t : fuzz.targets) {
    fuzz_runs += t.runs;
    fuzz_bad += t.law_violations;
  }
  return {bad == 0 && fuzz_bad == 0, std::to_string(records) + " bench records, " + std::to_string(bad) +
                                         " off; " + std::to_string(fuzz_runs) + " fuzz runs, " +
                                         std::to_string(fuzz_bad) + " off"};
}

Outcome scaling() {
  auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (EngineConfig e : {EngineConfig{EngineKind::ot}, EngineConfig{EngineKind::ot_server},
                         EngineConfig{EngineKind::woot}, EngineConfig{EngineKind::logoot}}) {
    auto recs = bench_scaling({1000, 10000, 100000}, 10, e);
    auto v = check_scaling(recs, e.kind);
    ok = ok && v.ok;
    double worst = 0;
    for (const auto& r : recs) worst = std::max(worst, r.remote_work_max);
    detail += to_string(e.kind) + std::string(" max ") + fmt(worst, 0) + " " + recs.front().work_unit;
    if (!v.ok) detail += " (" + v.detail + ")";
    detail += ", ";
  }
  double s = seconds_since(t0);
  return {ok && s < 300, detail + fmt(s) + " s"};
}

Outcome fuzz(const FuzzSummary& sum) {
  bool ok = true;
  std::string detail;
  for (const auto& t : sum.targets) {
    bool strict = t.target.engine.kind == EngineKind::ot || t.target.engine.kind == EngineKind::woot;
    if (strict && t.divergences != 0) ok = false;
    if (!t.witnesses_replay) ok = false;
    if (strict || t.target.engine.kind == EngineKind::logoot) {
      if (!detail.empty()) detail += ", ";
      detail += t.label + " " + std::to_string(t.divergences) + "/" + std::to_string(t.runs);
      if (!t.witnesses.empty()) detail += " (" + std::to_string(t.witnesses.size()) + " witnesses replay)";
    }
  }
  return {ok, detail};
}

Outcome woot_precondition(const FuzzSummary& sum) {
  auto rep = exhaustive_convergence(ScriptSpace{}, {EngineKind::woot}, DeliveryPolicy::woot_precondition);
  std::size_t fuzz_fail = 0, fuzz_runs = 0;
  for (const auto& t : sum.targets)
    if (t.target.policy == DeliveryPolicy::woot_precondition) {
      fuzz_fail += t.divergences;
      fuzz_runs += t.runs;
    }
  return {rep.failures == 0 && fuzz_fail == 0 && fuzz_runs > 0,
          "exhaustive " + std::to_string(rep.interleavings) + " delivery orders, " + std::to_string(rep.failures) +
              " failures; fuzz " + std::to_string(fuzz_fail) + "/" + std::to_string(fuzz_runs)};
}

Outcome relay_e2e() {
  bool ok = true;
  std::string detail;
  for (EngineConfig e : {EngineConfig{EngineKind::ot}, EngineConfig{EngineKind::ot_server},
                         EngineConfig{EngineKind::woot}, EngineConfig{EngineKind::logoot}}) {
    relay::E2EOptions opt;
    opt.engine = e;
    opt.mode = relay::Mode::replica_proxy;
    auto rep = relay::run_e2e(opt);
    bool pass = rep.converged && rep.settle_ms <= 2000 && rep.ops == 200;
    ok = ok && pass;
    if (!detail.empty()) detail += ", ";
    detail += to_string(e.kind) + std::string(pass ? " " : " FAILED ") +
              (rep.converged ? std::to_string(rep.settle_ms) + " ms" : rep.error);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  FuzzOptions fopt;  // 1000 runs, m=3, 20 ops per site
  auto fuzz_summary = fuzz_convergence(default_fuzz_targets(), fopt);

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exhaustive-convergence", exhaustive_oracle},
      {"tp1", tp1},
      {"ft-puzzle", ft_puzzle},
      {"interleaving", interleaving},
      {"tombstone-law", [&] { return tombstone_law(fuzz_summary); }},
      {"scaling", scaling},
      {"fuzz", [&] { return fuzz(fuzz_summary); }},
      {"woot-precondition", [&] { return woot_precondition(fuzz_summary); }},
      {"relay-e2e", relay_e2e},
  };

  json summary = json::array();
  bool all = true;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    summary.push_back({{"criterion", name}, {"pass", o.pass}, {"detail", o.detail}});
  }
  if (argc > 1) std::ofstream(argv[1]) << json{{"criteria", summary}, {"fuzz", fuzz_summary}}.dump(2) << '\n';
  return all ? 0 : 1;
}
