#include <gtest/gtest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <random>

#include "coedit/relay/mirror.hpp"
#include "coedit/relay/session.hpp"
#include "support.hpp"

using namespace coedit;
using namespace coedit::relay;
using coedit::testing::S;
using coedit::testing::T;

namespace {

// Clients talk to a session over FIFO links; the driver interleaves link
// deliveries and local edits at random, which is what latency amounts to.
struct Bench {
  std::shared_ptr<Session> session;
  std::map<SiteId, ClientMirror> clients;
  std::map<SiteId, std::deque<ProtocolMessage>> up, down;
  std::mt19937_64 rng;

  Bench(std::shared_ptr<Session> s, std::uint64_t seed) : session(std::move(s)), rng(seed) {}

  SiteId join() {
    auto out = session->join();
    SiteId site = out.front().to;
    clients.emplace(site, ClientMirror(out.front().msg));
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i].to != site) down[out[i].to].push_back(out[i].msg);
    return site;
  }

  void route(const std::vector<Outgoing>& out) {
    for (const auto& o : out) down[o.to].push_back(o.msg);
  }

  void edit(SiteId site) {
    auto& c = clients.at(site);
    std::size_t len = c.text().size();
    EditOp op = EditOp::ins(rng() % (len + 1), Text(1 + rng() % 2, U'a' + static_cast<char32_t>(rng() % 26)));
    if (len > 0 && rng() % 3 == 0) {
      std::size_t pos = rng() % len;
      op = EditOp::del(pos, 1 + rng() % std::min<std::size_t>(2, len - pos));
    }
    for (auto& m : c.edit(op)) up[site].push_back(std::move(m));
  }

  bool step_link() {
    std::vector<std::pair<bool, SiteId>> ready;
    for (auto& [s, q] : up)
      if (!q.empty()) ready.emplace_back(true, s);
    for (auto& [s, q] : down)
      if (!q.empty() && clients.count(s)) ready.emplace_back(false, s);
    if (ready.empty()) return false;
    auto [is_up, s] = ready[rng() % ready.size()];
    if (is_up) {
      auto m = up[s].front();
      up[s].pop_front();
      route(session->submit(s, m));
    } else {
      auto m = down[s].front();
      down[s].pop_front();
      for (auto& r : clients.at(s).receive(m)) up[s].push_back(std::move(r));
    }
    return true;
  }

  void drain() {
    while (step_link()) {
    }
  }
};

const std::vector<std::pair<EngineConfig, Mode>> kModes = {
    {{EngineKind::ot}, Mode::replica_proxy},
    {{EngineKind::ot_server}, Mode::replica_proxy},
    {{EngineKind::woot}, Mode::replica_proxy},
    {{EngineKind::logoot}, Mode::replica_proxy},
    {{EngineKind::logoot, TieBreakPolicy::site_order, AllocStrategy::random, 9}, Mode::replica_proxy},
    {{EngineKind::ot}, Mode::transforming_server},
    {{EngineKind::ot}, Mode::pure_relay},
    {{EngineKind::woot}, Mode::pure_relay},
    {{EngineKind::logoot}, Mode::pure_relay},
};

}  // namespace

TEST(Protocol, MessagesRoundTrip) {
  ProtocolMessage op;
  op.kind = Kind::op;
  op.session = "s1";
  op.site = 2;
  op.seq = 7;
  op.revision = 3;
  op.ops = {EditOp::ins(0, T("h\xC3\xA9"), 2)};
  EXPECT_EQ(parse_message(encode(op)), op);

  ProtocolMessage snap;
  snap.kind = Kind::snapshot;
  snap.text = "abc";
  snap.engine = EngineConfig{EngineKind::woot};
  snap.mode = Mode::pure_relay;
  snap.members = {1, 2};
  WootReplica w(1);
  snap.log = {WireOp{w.gen_insert(0, U'x')}};
  EXPECT_EQ(parse_message(encode(snap)), snap);
}

TEST(Protocol, DocumentedFramesParse) {
  auto join = parse_message(R"({"kind":"join","session":"s1-00abcd"})");
  EXPECT_EQ(join.kind, Kind::join);
  auto op = parse_message(
      R"({"kind":"op","session":"s1","site":1,"seq":1,"revision":0,"ops":[{"kind":"insert","pos":0,"content":"a"}]})");
  EXPECT_EQ(op.ops, OpList{EditOp::ins(0, T("a"))});
  auto ack = parse_message(R"({"kind":"ack","site":1,"seq":1,"revision":1})");
  EXPECT_EQ(ack.revision, 1u);
  EXPECT_THROW(parse_message("{\"kind\":\"shout\"}"), ConfigError);
  EXPECT_THROW(parse_message("not json"), ConfigError);
  EXPECT_EQ(json::parse(encode(op)).dump().find('\n'), std::string::npos);
}

TEST(SessionManager, CreateJoinAndErrors) {
  SessionManager mgr;
  auto a = mgr.create({EngineKind::ot}, Mode::transforming_server);
  auto b = mgr.create({EngineKind::ot}, Mode::transforming_server);
  EXPECT_NE(a, b);
  EXPECT_THROW(mgr.create({EngineKind::logoot}, Mode::transforming_server), ConfigError);
  EXPECT_THROW(mgr.create({EngineKind::ot_server}, Mode::pure_relay), ConfigError);
  EXPECT_THROW(mgr.get("nope"), UnknownSession);

  auto s = mgr.get(a);
  auto out = s->join();
  EXPECT_EQ(out.front().to, 1u);
  EXPECT_EQ(out.front().msg.kind, Kind::snapshot);
  EXPECT_EQ(*out.front().msg.text, "");
  EXPECT_EQ(s->join().front().to, 2u);
}

TEST(Session, SingleClientGetsAckOnly) {
  for (const auto& [engine, mode] : kModes) {
    Bench b(std::make_shared<Session>("t", engine, mode), 1);
    SiteId site = b.join();
    for (const auto& frame : b.clients.at(site).edit(EditOp::ins(0, T("ab"))))
      for (const auto& o : b.session->submit(site, frame)) {
        EXPECT_EQ(o.to, site);
        EXPECT_EQ(o.msg.kind, Kind::ack);
      }
    EXPECT_EQ(S(b.session->text()), "ab") << describe(engine) << " " << to_string(mode);
  }
}

TEST(Session, ConcurrentClientsConverge) {
  for (const auto& [engine, mode] : kModes) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      Bench b(std::make_shared<Session>("t", engine, mode), seed);
      std::vector<SiteId> sites{b.join(), b.join(), b.join()};
      for (int k = 0; k < 60; ++k) {
        if (b.rng() % 2) b.edit(sites[b.rng() % sites.size()]);
        for (int i = b.rng() % 3; i-- > 0;) b.step_link();
      }
      b.drain();
      Text server = b.session->text();
      for (auto s : sites) {
        EXPECT_TRUE(b.clients.at(s).idle());
        EXPECT_EQ(S(b.clients.at(s).text()), S(server)) << describe(engine) << " " << to_string(mode) << " seed " << seed;
      }
      for (const auto& [s, t] : b.session->replica_texts()) EXPECT_EQ(t, server);
    }
  }
}

TEST(Session, LateJoinerSeesServerText) {
  for (const auto& [engine, mode] : kModes) {
    Bench b(std::make_shared<Session>("t", engine, mode), 5);
    SiteId a = b.join();
    for (int k = 0; k < 10; ++k) b.edit(a);
    b.drain();
    SiteId late = b.join();
    EXPECT_EQ(b.clients.at(late).text(), b.session->text());
    b.edit(late);
    b.edit(a);
    b.drain();
    EXPECT_EQ(b.clients.at(late).text(), b.clients.at(a).text()) << describe(engine) << " " << to_string(mode);
  }
}

TEST(Session, SequenceGapAndDuplicates) {
  Session s("t", {EngineKind::woot}, Mode::replica_proxy);
  s.join();
  ProtocolMessage m;
  m.kind = Kind::op;
  m.seq = 1;
  m.ops = {EditOp::ins(0, T("a"))};
  EXPECT_EQ(s.submit(1, m).front().msg.kind, Kind::ack);
  auto again = s.submit(1, m);  // resent: acked again, not applied twice
  ASSERT_EQ(again.size(), 1u);
  EXPECT_EQ(again.front().msg.kind, Kind::ack);
  EXPECT_EQ(S(s.text()), "a");
  m.seq = 3;
  EXPECT_THROW(s.submit(1, m), SequenceGapError);
  EXPECT_THROW(s.submit(9, m), PreconditionError);
}

TEST(Session, StaleRevisionIsRejected) {
  Session s("t", {EngineKind::ot}, Mode::transforming_server);
  s.join();
  ProtocolMessage m;
  m.kind = Kind::op;
  m.seq = 1;
  m.revision = 4;
  m.ops = {EditOp::ins(0, T("a"))};
  EXPECT_THROW(s.submit(1, m), StaleRevisionError);
}

TEST(Session, LeaveIsIdempotentAndRejoinGetsNewSite) {
  SessionManager mgr({std::chrono::seconds(0), {}});
  auto id = mgr.create({EngineKind::logoot}, Mode::replica_proxy);
  auto s = mgr.get(id);
  s->join();
  s->join();
  auto out = s->leave(1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.front().to, 2u);
  EXPECT_EQ(out.front().msg.members, std::vector<SiteId>{2});
  EXPECT_TRUE(s->leave(1).empty());
  EXPECT_EQ(s->join().front().to, 3u);
  EXPECT_EQ(mgr.reap(), 0u);
  s->leave(2);
  s->leave(3);
  EXPECT_EQ(mgr.reap(Clock::now() + std::chrono::seconds(1)), 1u);
  EXPECT_THROW(mgr.get(id), UnknownSession);
}

TEST(Session, IdleTimeoutDefaultsToTenMinutes) {
  SessionManager mgr;
  EXPECT_EQ(mgr.options().idle_timeout, std::chrono::seconds(600));
  auto id = mgr.create({EngineKind::ot}, Mode::replica_proxy);
  EXPECT_EQ(mgr.reap(Clock::now() + std::chrono::seconds(599)), 0u);
  EXPECT_EQ(mgr.reap(Clock::now() + std::chrono::seconds(601)), 1u);
  (void)id;
}

TEST(Session, SnapshotTokenAvoidsDuplicatePatches) {
  for (const auto& [engine, mode] : kModes) {
    Bench b(std::make_shared<Session>("t", engine, mode), 11);
    SiteId a = b.join(), c = b.join();
    for (int k = 0; k < 8; ++k) b.edit(a);
    // deliver a's ops to the server, but leave c's downlink untouched
    while (!b.up[a].empty() || !b.down[a].empty()) {
      if (!b.up[a].empty()) {
        auto m = b.up[a].front();
        b.up[a].pop_front();
        b.route(b.session->submit(a, m));
      }
      if (!b.down[a].empty()) {
        auto m = b.down[a].front();
        b.down[a].pop_front();
        for (auto& r : b.clients.at(a).receive(m)) b.up[a].push_back(r);
      }
    }
    ASSERT_FALSE(b.down[c].empty());
    ProtocolMessage req;
    req.kind = Kind::snapshot;
    auto snap = b.session->submit(c, req).front().msg;
    b.clients.at(c).receive(snap);
    EXPECT_EQ(b.clients.at(c).text(), b.session->text());
    b.drain();  // the stale patches still queued for c are now dropped
    EXPECT_EQ(b.clients.at(c).text(), b.clients.at(a).text()) << describe(engine) << " " << to_string(mode);
    b.edit(c);
    b.drain();
    EXPECT_EQ(b.clients.at(c).text(), b.clients.at(a).text());
  }
}

TEST(Session, WritesAppendOnlyLog) {
  auto dir = std::filesystem::temp_directory_path() / "coedit_relay_log_test";
  std::filesystem::remove_all(dir);
  SessionManager mgr({std::chrono::seconds(600), dir});
  auto id = mgr.create({EngineKind::woot}, Mode::replica_proxy);
  Bench b(mgr.get(id), 2);
  SiteId a = b.join();
  b.edit(a);
  b.drain();
  std::ifstream in(dir / (id + ".log"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 2u);
  std::filesystem::remove_all(dir);
}

TEST(Session, TransformingServerLogIsTheTotalOrder) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Bench b(std::make_shared<Session>("t", EngineConfig{EngineKind::ot}, Mode::transforming_server), seed);
    std::vector<SiteId> sites{b.join(), b.join(), b.join()};
    std::size_t checked = 0;
    auto check_idle_clients = [&] {
      auto log = b.session->server_log();
      for (auto s : sites) {
        const auto& c = b.clients.at(s);
        if (!c.idle() || c.revision() > log.size()) continue;
        Text replay;
        for (std::size_t r = 0; r < c.revision(); ++r)
          for (const auto& op : log[r].ops) apply_text(replay, op);
        EXPECT_EQ(S(c.text()), S(replay)) << "seed " << seed << " site " << s << " at revision " << c.revision();
        ++checked;
      }
    };
    for (int k = 0; k < 80; ++k) {
      if (b.rng() % 2) b.edit(sites[b.rng() % sites.size()]);
      for (int i = b.rng() % 3; i-- > 0;) b.step_link();
      check_idle_clients();
    }
    b.drain();
    check_idle_clients();
    EXPECT_GT(checked, 0u);
  }
}
