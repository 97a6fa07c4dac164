// coedit: command-line front end for the consistency workbench.
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
// errors, unreadable input or bad configuration.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "coedit/harness/report.hpp"
#include "coedit/relay/server.hpp"

using namespace coedit;

namespace {

constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineFlags {
  std::string engine = "ot";
  std::string tie = "site-order";
  std::string alloc = "boundary";
  std::uint64_t seed = 0;

  void add(CLI::App* cmd, bool with_engine = true) {
    if (with_engine) cmd->add_option("--engine", engine, "ot | ot-server | woot | logoot")->capture_default_str();
    cmd->add_option("--tie", tie, "OT tie-break: site-order | naive-left")->capture_default_str();
    cmd->add_option("--alloc", alloc, "Logoot allocation: boundary | random")->capture_default_str();
    cmd->add_option("--engine-seed", seed, "Logoot allocation seed")->capture_default_str();
  }

  EngineConfig config(const std::string& kind) const {
    EngineConfig c;
    c.kind = parse_engine(kind);
    c.tie = parse_tie(tie);
    c.alloc = parse_alloc(alloc);
    c.seed = seed;
    return c;
  }
  EngineConfig config() const { return config(engine); }
};

std::vector<std::string> engine_list(const std::string& s, std::vector<std::string> all) {
  if (s == "all") return all;
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void emit(const json& report, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw UsageError("cannot write " + out);
  f << report.dump(2) << '\n';
}

void emit_csv(const std::vector<BenchRecord>& recs, const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  f << bench_csv_header() << '\n';
  for (const auto& r : recs) write_csv_row(f, r);
}

std::string slurp(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError("no such file: " + path);
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void note(bool ok, const std::string& what) { std::cerr << (ok ? "ok    " : "FAIL  ") << what << '\n'; }

// --- run -----------------------------------------------------------------

struct RunCmd {
  std::string file, out;
  EngineFlags flags;
  bool engine_given = false, tie_given = false, alloc_given = false, seed_given = false;
  bool no_trace = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "Run one scenario file through an engine");
    cmd->add_option("file", file, "scenario JSON")->required();
    flags.add(cmd);
    cmd->add_flag("--no-trace", no_trace, "omit the delivery trace from the report");
    cmd->add_option("-o,--out", out, "report path (default stdout)");
    cmd->callback([this, cmd] {
      engine_given = cmd->count("--engine") > 0;
      tie_given = cmd->count("--tie") > 0;
      alloc_given = cmd->count("--alloc") > 0;
      seed_given = cmd->count("--engine-seed") > 0;
    });
  }

  int operator()() const {
    json j;
    try {
      j = json::parse(slurp(file));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    EngineConfig engine = flags.config();
    if (!engine_given && j.contains("engine"))
      engine = j.at("engine").is_string() ? flags.config(j.at("engine").get<std::string>())
                                          : j.at("engine").get<EngineConfig>();
    // flags given explicitly override the file
    if (tie_given) engine.tie = parse_tie(flags.tie);
    if (alloc_given) engine.alloc = parse_alloc(flags.alloc);
    if (seed_given) engine.seed = flags.seed;
    ScenarioScript script;
    try {
      script = j.contains("scenario") ? j.at("scenario").get<ScenarioScript>() : j.get<ScenarioScript>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad scenario: ") + e.what());
    }
    if (engine.kind == EngineKind::ot_server) script.topology = Topology::star_server;
    auto result = run_scenario(script, engine);
    json report = {{"scenario", script}, {"result", result_json(result, !no_trace)}};
    bool ok = check_convergence(result).converged && result.errors.empty();
    report["ok"] = ok;
    emit(report, out);
    note(ok, "converged");
    return ok ? 0 : kFailed;
  }
};

// --- exhaustive / tp1 / search-ft ----------------------------------------

struct SpaceFlags {
  ScriptSpace space;
  std::string alphabet = "ab";
  void add(CLI::App* cmd) {
    cmd->add_option("--max-ops", space.max_ops, "concurrent ops per script")->capture_default_str();
    cmd->add_option("--doc-len", space.doc_len, "longest initial document")->capture_default_str();
    cmd->add_option("--alphabet", alphabet, "document and insert alphabet")->capture_default_str();
  }
  ScriptSpace get() const {
    ScriptSpace s = space;
    s.alphabet = from_utf8(alphabet);
    return s;
  }
};

struct ExhaustiveCmd {
  SpaceFlags space;
  EngineFlags flags;
  std::string engines = "ot,woot,logoot";
  std::string policy = "causal-order";
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("exhaustive", "Check every delivery order of every small script");
    cmd->add_option("--engines", engines, "comma list or 'all'")->capture_default_str();
    cmd->add_option("--policy", policy, "causal-order | woot-precondition")->capture_default_str();
    flags.add(cmd, false);
    space.add(cmd);
    cmd->add_option("-o,--out", out, "report path");
  }

  int operator()() const {
    json reports = json::array();
    bool ok = true;
    for (const auto& e : engine_list(engines, {"ot", "ot-server", "woot", "logoot"})) {
      auto rep = exhaustive_convergence(space.get(), flags.config(e), parse_policy(policy));
      note(rep.failures == 0, describe(rep.engine) + ": " + std::to_string(rep.failures) + " failing scripts of " +
                                  std::to_string(rep.scripts));
      ok = ok && rep.failures == 0;
      reports.push_back(rep);
    }
    emit({{"space", space.get()}, {"reports", reports}, {"ok", ok}}, out);
    return ok ? 0 : kFailed;
  }
};

struct Tp1Cmd {
  std::size_t doc_len = 3;
  std::string alphabet = "ab", tie = "site-order", out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("tp1", "Check TP1 for every op pair on every small document");
    cmd->add_option("--doc-len", doc_len)->capture_default_str();
    cmd->add_option("--alphabet", alphabet)->capture_default_str();
    cmd->add_option("--tie", tie)->capture_default_str();
    cmd->add_option("-o,--out", out, "report path");
  }

  int operator()() const {
    auto rep = check_tp1(doc_len, from_utf8(alphabet), parse_tie(tie));
    note(rep.failures == 0, std::to_string(rep.pairs) + " pairs, " + std::to_string(rep.failures) + " failures");
    emit(rep, out);
    return rep.failures == 0 ? 0 : kFailed;
  }
};

struct SearchFtCmd {
  SpaceFlags space;
  std::string tie = "both", out;
  std::size_t keep = 20;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("search-ft", "Search the script space for OT divergences");
    cmd->add_option("--tie", tie, "naive-left | site-order | both")->capture_default_str();
    cmd->add_option("--keep", keep, "witnesses kept per policy")->capture_default_str();
    space.add(cmd);
    cmd->add_option("-o,--out", out, "report path");
  }

  int operator()() const {
    json reports = json::object();
    bool ok = true;
    for (const std::string t : {"naive-left", "site-order"}) {
      if (tie != "both" && tie != t) continue;
      auto rep = search_ft_puzzle(space.get(), parse_tie(t), keep);
      reports[t] = rep;
      // naive-left must show the puzzle; site-order must not
      bool expect_found = t == "naive-left";
      bool passed = expect_found ? rep.total_witnesses > 0 : rep.total_witnesses == 0;
      note(passed, t + ": " + std::to_string(rep.total_witnesses) + " divergent script/engine pairs");
      ok = ok && passed;
    }
    if (tie != "both" && reports.empty()) throw UsageError("unknown tie policy '" + tie + "'");
    emit({{"reports", reports}, {"ok", ok}}, out);
    return ok ? 0 : kFailed;
  }
};

// --- interleave ----------------------------------------------------------

struct InterleaveCmd {
  std::string a = "Alice", b = "Bob", engines = "default", out;
  std::size_t runs = 100;
  std::uint64_t first_seed = 0;
  EngineFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("interleave", "Two concurrent inserts at one spot: are the words kept whole?");
    cmd->add_option("--a", a, "word typed at site 1")->capture_default_str();
    cmd->add_option("--b", b, "word typed at site 2")->capture_default_str();
    cmd->add_option("--runs", runs, "seeded runs per engine")->capture_default_str();
    cmd->add_option("--first-seed", first_seed)->capture_default_str();
    cmd->add_option("--engines", engines,
                    "comma list of engine[/alloc], or 'default' for the OT, WOOT and Logoot comparison")
        ->capture_default_str();
    flags.add(cmd, false);
    cmd->add_option("-o,--out", out, "report path");
  }

  int operator()() const {
    struct Case {
      EngineConfig engine;
      std::optional<bool> expect_split;  // only for the default comparison
    };
    std::vector<Case> cases;
    if (engines == "default") {
      cases = {{{EngineKind::ot, TieBreakPolicy::site_order}, false},
               {{EngineKind::woot}, false},
               {{EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::random}, true},
               {{EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::boundary}, std::nullopt}};
    } else {
      for (const auto& e : engine_list(engines, {})) {
        auto slash = e.find('/');
        EngineConfig c = flags.config(e.substr(0, slash));
        if (slash != std::string::npos) c.alloc = parse_alloc(e.substr(slash + 1));
        cases.push_back({c, std::nullopt});
      }
    }
    json reports = json::array();
    bool ok = true;
    for (const auto& c : cases) {
      auto rep = scenario_interleaving(from_utf8(a), from_utf8(b), c.engine, runs, first_seed);
      bool passed = rep.diverged == 0;
      if (c.expect_split) passed = passed && (*c.expect_split ? rep.non_contiguous >= 1 : rep.non_contiguous == 0);
      note(passed, describe(c.engine) + ": " + std::to_string(rep.non_contiguous) + "/" + std::to_string(runs) +
                       " non-contiguous");
      ok = ok && passed;
      reports.push_back(rep);
    }
    emit({{"reports", reports}, {"ok", ok}}, out);
    return ok ? 0 : kFailed;
  }
};

// --- benches -------------------------------------------------------------

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

struct BenchTombstoneCmd {
  std::string engines = "woot,logoot", fractions = "0,0.25,0.5,0.75,0.9", out, csv;
  std::size_t visible = 1000;
  EngineFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench-tombstone", "Space and remote cost as deletions pile up");
    cmd->add_option("--engines", engines, "comma list or 'all'")->capture_default_str();
    cmd->add_option("--visible", visible, "visible length kept fixed across the sweep")->capture_default_str();
    cmd->add_option("--fractions", fractions, "deleted fractions, each in [0,1)")->capture_default_str();
    flags.add(cmd, false);
    cmd->add_option("-o,--out", out, "JSON report path");
    cmd->add_option("--csv", csv, "CSV path");
  }

  int operator()() const {
    std::vector<BenchRecord> all;
    bool ok = true;
    for (const auto& e : engine_list(engines, {"ot", "woot", "logoot"})) {
      auto recs = bench_tombstone_sweep(visible, parse_doubles(fractions), flags.config(e));
      for (const auto& r : recs) {
        bool law = tombstone_law_holds(r);
        ok = ok && law;
        note(law, r.engine + " f=" + std::to_string(r.fraction) + ": C=" + std::to_string(r.C) +
                      " C_t=" + std::to_string(r.C_t));
      }
      all.insert(all.end(), recs.begin(), recs.end());
    }
    emit({{"records", all}, {"ok", ok}}, out);
    emit_csv(all, csv);
    return ok ? 0 : kFailed;
  }
};

struct BenchScalingCmd {
  std::string engines = "all", sizes = "1000,10000,100000", out, csv;
  std::size_t c = 10;
  EngineFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench-scaling", "Remote integration work as the document grows");
    cmd->add_option("--engines", engines, "comma list or 'all'")->capture_default_str();
    cmd->add_option("--C", sizes, "document sizes")->capture_default_str();
    cmd->add_option("--c", c, "concurrent ops, 1..10")->capture_default_str();
    flags.add(cmd, false);
    cmd->add_option("-o,--out", out, "JSON report path");
    cmd->add_option("--csv", csv, "CSV path");
  }

  int operator()() const {
    std::vector<std::size_t> Cs;
    for (double d : parse_doubles(sizes)) Cs.push_back(static_cast<std::size_t>(d));
    std::vector<BenchRecord> all;
    json verdicts = json::object();
    bool ok = true;
    for (const auto& e : engine_list(engines, {"ot", "ot-server", "woot", "logoot"})) {
      EngineConfig config = flags.config(e);
      auto recs = bench_scaling(Cs, c, config);
      auto v = check_scaling(recs, config.kind);
      note(v.ok, describe(config) + (v.detail.empty() ? "" : ": " + v.detail));
      verdicts[describe(config)] = v;
      ok = ok && v.ok;
      all.insert(all.end(), recs.begin(), recs.end());
    }
    emit({{"records", all}, {"verdicts", verdicts}, {"ok", ok}}, out);
    emit_csv(all, csv);
    return ok ? 0 : kFailed;
  }
};

// --- fuzz ----------------------------------------------------------------

struct FuzzCmd {
  FuzzOptions opt;
  std::string targets = "all", out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fuzz", "Seeded random scenarios; failures are minimized into witnesses");
    cmd->add_option("--runs", opt.runs)->capture_default_str();
    cmd->add_option("--sites", opt.m, "sites per scenario")->capture_default_str();
    cmd->add_option("--ops", opt.ops_per_site, "ops per site")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "first seed")->capture_default_str();
    cmd->add_option("--max-latency", opt.max_latency)->capture_default_str();
    cmd->add_option("--workers", opt.workers, "threads; 0 reads COEDIT_WORKERS or uses every core")
        ->capture_default_str();
    cmd->add_option("--targets", targets, "comma list of target labels, or 'all'")->capture_default_str();
    cmd->add_option("-o,--out", out, "report path");
  }

  int operator()() const {
    std::vector<FuzzTarget> chosen;
    auto all = default_fuzz_targets();
    if (targets == "all") {
      chosen = all;
    } else {
      for (const auto& label : engine_list(targets, {})) {
        auto it = std::find_if(all.begin(), all.end(), [&](const FuzzTarget& t) { return t.label() == label; });
        if (it == all.end()) throw UsageError("unknown fuzz target '" + label + "'");
        chosen.push_back(*it);
      }
    }
    auto summary = fuzz_convergence(chosen, opt);
    bool ok = true;
    for (const auto& t : summary.targets) {
      // Logoot divergences are findings, kept as witnesses; they must replay.
      bool tolerated = t.target.engine.kind == EngineKind::logoot;
      bool passed = t.law_violations == 0 && t.witnesses_replay && (tolerated || t.divergences == 0);
      note(passed, t.label + ": " + std::to_string(t.divergences) + " divergences in " + std::to_string(t.runs));
      ok = ok && passed;
    }
    json report = summary;
    report["ok"] = ok;
    emit(report, out);
    return ok ? 0 : kFailed;
  }
};

// --- serve ---------------------------------------------------------------

struct ServeCmd {
  std::string address = "127.0.0.1", mode = "replica-proxy", log_dir;
  unsigned short port = 8080;
  long idle_timeout = 600;
  EngineFlags flags;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("serve", "Run the relay service");
    cmd->add_option("--port", port)->envname("COEDIT_PORT")->capture_default_str();
    cmd->add_option("--address", address)->envname("COEDIT_ADDRESS")->capture_default_str();
    cmd->add_option("--mode", mode, "default session mode: pure-relay | transforming-server | replica-proxy")
        ->envname("COEDIT_MODE")
        ->capture_default_str();
    cmd->add_option("--engine", flags.engine, "default session engine")->envname("COEDIT_ENGINE")->capture_default_str();
    cmd->add_option("--tie", flags.tie)->envname("COEDIT_TIE")->capture_default_str();
    cmd->add_option("--alloc", flags.alloc)->envname("COEDIT_ALLOC")->capture_default_str();
    cmd->add_option("--idle-timeout", idle_timeout, "seconds before an empty session is reclaimed")
        ->envname("COEDIT_IDLE_TIMEOUT")
        ->capture_default_str();
    cmd->add_option("--log-dir", log_dir, "append-only per-session debug logs")->envname("COEDIT_LOG_DIR");
  }

  int operator()() const {
    relay::ServerOptions so;
    so.address = address;
    so.port = port;
    so.default_engine = flags.config();
    so.default_mode = relay::parse_mode(mode);
    so.manager.idle_timeout = std::chrono::seconds(idle_timeout);
    if (!log_dir.empty()) so.manager.log_dir = log_dir;

    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

    relay::RelayServer server(so);
    server.start();
    std::cerr << "relay listening on " << address << ':' << server.port() << " (" << mode << ", "
              << describe(so.default_engine) << ")\n";
    int sig = 0;
    sigwait(&sigs, &sig);
    server.stop();
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coedit: OT and CRDT co-editing consistency workbench"};
  app.require_subcommand(1);
  RunCmd run;
  ExhaustiveCmd exhaustive;
  Tp1Cmd tp1;
  SearchFtCmd search;
  InterleaveCmd interleave;
  BenchTombstoneCmd tombstone;
  BenchScalingCmd scaling;
  FuzzCmd fuzz;
  ServeCmd serve;
  run.add(app);
  exhaustive.add(app);
  tp1.add(app);
  search.add(app);
  interleave.add(app);
  tombstone.add(app);
  scaling.add(app);
  fuzz.add(app);
  serve.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const std::string which = app.get_subcommands().front()->get_name();
    if (which == "run") return run();
    if (which == "exhaustive") return exhaustive();
    if (which == "tp1") return tp1();
    if (which == "search-ft") return search();
    if (which == "interleave") return interleave();
    if (which == "bench-tombstone") return tombstone();
    if (which == "bench-scaling") return scaling();
    if (which == "fuzz") return fuzz();
    if (which == "serve") return serve();
  } catch (const UsageError& e) {
    std::cerr << "coedit: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "coedit: " << e.what() << '\n';
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "coedit: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "coedit: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
