#pragma once

// Benchmark suites. Work counters (transform calls, object visits, id
// comparisons) are the primary signal; wall-clock medians ride along.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "coedit/replica.hpp"
#include "coedit/serialize.hpp"

namespace coedit {

struct BenchRecord {
  std::string suite;  // tombstone | scaling
  std::string engine;
  // workload
  std::uint64_t insertions = 0;
  std::uint64_t deletions = 0;
  double fraction = 0;
  std::uint64_t C_target = 0;
  std::uint64_t c = 0;
  std::uint64_t m = 2;
  // measured
  std::uint64_t C = 0;
  std::uint64_t C_t = 0;  // objects held, tombstones included
  double space = 0;       // WOOT: C_t, Logoot: id triples, OT: history length
  double local_ns = 0;    // medians
  double remote_ns = 0;
  double local_work = 0;  // mean counter per op
  double remote_work = 0;
  double remote_work_max = 0;
  std::string work_unit;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

inline void to_json(json& j, const BenchRecord& r) {
  j = {{"suite", r.suite},         {"engine", r.engine},
       {"insertions", r.insertions}, {"deletions", r.deletions},
       {"fraction", r.fraction},   {"C_target", r.C_target},
       {"c", r.c},                 {"m", r.m},
       {"C", r.C},                 {"C_t", r.C_t},
       {"space", r.space},         {"local_ns", r.local_ns},
       {"remote_ns", r.remote_ns}, {"local_work", r.local_work},
       {"remote_work", r.remote_work}, {"remote_work_max", r.remote_work_max},
       {"work_unit", r.work_unit}};
}

inline const char* bench_csv_header() {
  return "suite,engine,insertions,deletions,fraction,C_target,c,m,C,C_t,space,local_ns,remote_ns,local_work,"
         "remote_work,remote_work_max,work_unit";
}

inline void write_csv_row(std::ostream& os, const BenchRecord& r) {
  os << r.suite << ',' << r.engine << ',' << r.insertions << ',' << r.deletions << ',' << r.fraction << ','
     << r.C_target << ',' << r.c << ',' << r.m << ',' << r.C << ',' << r.C_t << ',' << r.space << ',' << r.local_ns
     << ',' << r.remote_ns << ',' << r.local_work << ',' << r.remote_work << ',' << r.remote_work_max << ','
     << r.work_unit << '\n';
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double since(Clock::time_point t0) {
  return std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
}

inline const char* work_unit(EngineKind k) {
  switch (k) {
    case EngineKind::ot:
    case EngineKind::ot_server: return "transform_calls";
    case EngineKind::woot: return "visits";
    case EngineKind::logoot: return "comparisons";
  }
  return "?";
}

// Counter for the replica's most recent remote integration.
inline double last_work(const Replica& r) {
  if (auto* ot = r.as<OTReplica>()) return static_cast<double>(ot->stats().last_transform_calls);
  if (auto* w = r.as<WootReplica>()) return static_cast<double>(w->stats().last_visits);
  if (auto* l = r.as<LogootReplica>()) return static_cast<double>(l->stats().last_comparisons);
  return 0;
}

inline void fill_counts(BenchRecord& rec, const Replica& r) {
  auto m = r.metrics();
  rec.C = static_cast<std::uint64_t>(m.at("C"));
  rec.C_t = rec.C;
  if (r.as<WootReplica>()) {
    rec.C_t = static_cast<std::uint64_t>(m.at("C_t"));
    rec.space = m.at("C_t");
  } else if (r.as<LogootReplica>()) {
    rec.space = m.at("triples");
  } else if (auto* ot = r.as<OTReplica>()) {
    rec.space = static_cast<double>(ot->history_size());
  }
}

inline Text filler(std::size_t n) {
  Text t(n, U'a');
  for (std::size_t i = 0; i < n; ++i) t[i] = U'a' + static_cast<char32_t>(i % 26);
  return t;
}

}  // namespace detail

// Site 1 types n characters left to right and then deletes round(f*n) of them
// at seeded positions; site 2 integrates everything remotely. A final batch
// of probe inserts from site 1 measures remote cost at the resulting C_t;
// the counts are taken before the probes.
inline std::vector<BenchRecord> bench_tombstone(std::size_t n, double f, const EngineConfig& engine,
                                                std::size_t probes = 32) {
  if (n < 1) throw PreconditionError("bench_tombstone needs n >= 1");
  if (!(f >= 0 && f <= 1)) throw PreconditionError("delete fraction must lie in [0, 1]");
  if (engine.kind == EngineKind::ot_server) throw ConfigError("bench_tombstone runs peer engines only");

  Replica writer(engine, 1, {1, 2});
  Replica reader(engine, 2, {1, 2});
  std::vector<double> local_ns, remote_ns, local_work;

  auto ship = [&](const EditOp& op) {
    auto t0 = detail::Clock::now();
    auto wires = writer.local(op);
    local_ns.push_back(detail::since(t0));
    if (auto* w = writer.as<WootReplica>()) local_work.push_back(static_cast<double>(w->stats().last_visits));
    for (const auto& w : wires) reader.remote(w);
  };

  for (std::size_t i = 0; i < n; ++i) ship(EditOp::ins(i, Text(1, U'a' + static_cast<char32_t>(i % 26))));
  auto deletions = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
  std::mt19937_64 rng(n * 31 + deletions);
  for (std::size_t k = 0; k < deletions; ++k) ship(EditOp::del(rng() % (n - k), 1));

  BenchRecord rec;
  rec.suite = "tombstone";
  rec.engine = describe(engine);
  rec.insertions = n;
  rec.deletions = deletions;
  rec.fraction = f;
  rec.C_target = n - deletions;
  rec.work_unit = detail::work_unit(engine.kind);
  detail::fill_counts(rec, reader);

  std::vector<double> work;
  for (std::size_t k = 0; k < probes; ++k) {
    std::size_t visible = writer.text().size();
    auto wires = writer.local(EditOp::ins(visible * (k + 1) / (probes + 1), Text(1, U'#')));
    for (const auto& w : wires) {
      auto t0 = detail::Clock::now();
      reader.remote(w);
      remote_ns.push_back(detail::since(t0));
      work.push_back(detail::last_work(reader));
    }
  }
  rec.local_ns = detail::median(local_ns);
  rec.local_work = detail::mean(local_work);
  rec.remote_ns = detail::median(remote_ns);
  rec.remote_work = detail::mean(work);
  rec.remote_work_max = work.empty() ? 0 : *std::max_element(work.begin(), work.end());
  return {rec};
}

// Fixed visible length, growing deletion fraction: n = C / (1 - f).
inline std::vector<BenchRecord> bench_tombstone_sweep(std::size_t visible, const std::vector<double>& fractions,
                                                      const EngineConfig& engine) {
  std::vector<BenchRecord> out;
  for (double f : fractions) {
    if (!(f >= 0 && f < 1)) throw PreconditionError("sweep fractions must lie in [0, 1)");
    auto n = static_cast<std::size_t>(std::llround(static_cast<double>(visible) / (1 - f)));
    auto recs = bench_tombstone(n, f, engine);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

// The counting law on a finished tombstone record. WOOT keeps both
// sentinels and every deleted character; Logoot and OT keep only the text.
inline bool tombstone_law_holds(const BenchRecord& r) {
  if (r.engine.rfind("woot", 0) == 0) return r.C_t == r.insertions + 2 && r.C == r.C_t - 2 - r.deletions;
  return r.C_t == r.C && r.C == r.insertions - r.deletions;
}

namespace detail {

// Two peers seeded with C characters each type c characters at the middle,
// concurrently, then exchange. Remote cost is read from the counters of the
// integrating replica.
inline BenchRecord scaling_peer(std::size_t C, std::size_t c, const EngineConfig& engine) {
  Replica a(engine, 1, {1, 2}), b(engine, 2, {1, 2});
  Text doc = filler(C);
  a.seed(doc);
  b.seed(doc);

  std::vector<double> local_ns, local_work, remote_ns, work;
  std::vector<WireOp> from_a, from_b;
  auto type = [&](Replica& r, std::vector<WireOp>& out, char32_t ch) {
    for (std::size_t k = 0; k < c; ++k) {
      auto t0 = Clock::now();
      auto wires = r.local(EditOp::ins(C / 2 + k, Text(1, ch)));
      local_ns.push_back(since(t0));
      if (r.as<OTReplica>()) local_work.push_back(0);  // local ops never transform
      out.insert(out.end(), wires.begin(), wires.end());
    }
  };
  type(a, from_a, U'x');
  type(b, from_b, U'y');
  auto integrate = [&](Replica& r, const std::vector<WireOp>& ops) {
    for (const auto& w : ops) {
      auto t0 = Clock::now();
      r.remote(w);
      remote_ns.push_back(since(t0));
      work.push_back(last_work(r));
    }
  };
  integrate(a, from_b);
  integrate(b, from_a);
  if (a.text() != b.text()) throw std::logic_error("scaling workload diverged");

  BenchRecord rec;
  rec.suite = "scaling";
  rec.engine = describe(engine);
  rec.C_target = C;
  rec.c = c;
  rec.work_unit = work_unit(engine.kind);
  fill_counts(rec, b);
  rec.local_ns = median(local_ns);
  rec.local_work = mean(local_work);
  rec.remote_ns = median(remote_ns);
  rec.remote_work = mean(work);
  rec.remote_work_max = work.empty() ? 0 : *std::max_element(work.begin(), work.end());
  return rec;
}

// Server mode: c clients each submit one op generated at the same revision,
// so the k-th arrival is rebased over k-1 concurrent log entries.
inline BenchRecord scaling_server(std::size_t C, std::size_t c, const EngineConfig& engine) {
  Text doc = filler(C);
  OTServer server(engine.tie);
  server.seed(doc);
  std::vector<OTClient> clients;
  for (std::size_t i = 0; i < c; ++i) {
    clients.emplace_back(static_cast<SiteId>(i + 1), engine.tie);
    clients.back().seed(doc);
  }
  std::vector<double> local_ns, remote_ns, work;
  std::vector<OTWireOp> sent;
  for (auto& cl : clients) {
    auto t0 = Clock::now();
    auto w = cl.local(EditOp::ins(C / 2, Text(1, U'x')));
    local_ns.push_back(since(t0));
    sent.push_back(*w);
  }
  std::vector<OTWireOp> broadcast;
  for (const auto& w : sent) {
    auto t0 = Clock::now();
    broadcast.push_back(server.integrate(w));
    remote_ns.push_back(since(t0));
    work.push_back(static_cast<double>(server.last_transform_calls()));
  }
  for (auto& cl : clients)
    for (const auto& msg : broadcast) cl.receive(msg);
  for (const auto& cl : clients)
    if (cl.text() != server.text()) throw std::logic_error("server scaling workload diverged");

  BenchRecord rec;
  rec.suite = "scaling";
  rec.engine = describe(engine);
  rec.C_target = C;
  rec.c = c;
  rec.m = c + 1;
  rec.work_unit = work_unit(engine.kind);
  rec.C = rec.C_t = server.text().size();
  rec.space = static_cast<double>(server.revision());
  rec.local_ns = median(local_ns);
  rec.local_work = 0;
  rec.remote_ns = median(remote_ns);
  rec.remote_work = mean(work);
  rec.remote_work_max = *std::max_element(work.begin(), work.end());
  return rec;
}

}  // namespace detail

inline std::vector<BenchRecord> bench_scaling(const std::vector<std::size_t>& C_values, std::size_t c,
                                              const EngineConfig& engine) {
  if (c < 1 || c > 10) throw PreconditionError("concurrency window c must be in [1, 10]");
  std::vector<BenchRecord> out;
  for (std::size_t C : C_values) {
    if (C < 1) throw PreconditionError("document length must be positive");
    out.push_back(engine.kind == EngineKind::ot_server ? detail::scaling_server(C, c, engine)
                                                       : detail::scaling_peer(C, c, engine));
  }
  return out;
}

struct ScalingVerdict {
  bool ok = true;
  std::string detail;
};

// The complexity assertions over one engine's C sweep.
inline ScalingVerdict check_scaling(const std::vector<BenchRecord>& recs, EngineKind kind) {
  ScalingVerdict v;
  auto fail = [&](const std::string& why) {
    v.ok = false;
    if (!v.detail.empty()) v.detail += "; ";
    v.detail += why;
  };
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    auto at = " at C=" + std::to_string(r.C_target);
    double c = static_cast<double>(r.c);
    switch (kind) {
      case EngineKind::ot_server:
        if (r.remote_work_max > c) fail("server transforms exceed c" + at);
        break;
      case EngineKind::ot:
        if (r.remote_work_max > c * c) fail("transforms exceed c^2" + at);
        if (i > 0 && r.remote_work_max != recs[0].remote_work_max) fail("transform count depends on C" + at);
        break;
      case EngineKind::woot:
        if (i > 0 && r.C_t >= recs[i - 1].C_t && r.remote_work < recs[i - 1].remote_work)
          fail("visits not monotone in C_t" + at);
        break;
      case EngineKind::logoot:
        if (r.remote_work_max > 2 * std::log2(static_cast<double>(r.C)) + 8) fail("comparisons exceed 2log2(C)+8" + at);
        break;
    }
  }
  return v;
}

}  // namespace coedit
