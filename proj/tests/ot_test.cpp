#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "coedit/ot.hpp"
#include "support.hpp"

using namespace coedit;
using coedit::testing::S;
using coedit::testing::T;

namespace {

Text run(Text text, const OpList& ops) {
  apply_ops(text, ops);
  return text;
}

Text run(Text text, const EditOp& op) { return run(std::move(text), OpList{op}); }

std::vector<Text> docs_up_to(std::size_t max_len) {
  std::vector<Text> out{Text{}};
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].size() < max_len)
      for (char32_t c : {U'a', U'b'}) out.push_back(out[i] + c);
  return out;
}

// Every insert of 1-2 chars and every delete, valid on `d`.
std::vector<EditOp> ops_on(const Text& d, SiteId site) {
  std::vector<EditOp> out;
  for (std::size_t p = 0; p <= d.size(); ++p)
    for (const char* s : {"a", "b", "ab", "ba"}) out.push_back(EditOp::ins(p, T(s), site, 1));
  for (std::size_t p = 0; p < d.size(); ++p)
    for (std::size_t n = 1; p + n <= d.size(); ++n) out.push_back(EditOp::del(p, n, site, 1));
  return out;
}

// Identity model: the effect two concurrent ops must have, computed without
// transforms. Every original char keeps a stable identity; inserts attach to
// the identity on their left (ties between sites by site id) and deletes
// remove identities.
Text intended(const Text& d, const EditOp& x, const EditOp& y) {
  struct Cell {
    char32_t ch;
    bool alive = true;
  };
  std::vector<Cell> base;
  for (char32_t c : d) base.push_back({c});
  std::map<std::size_t, std::vector<const EditOp*>> after;  // anchor slot -> inserts
  for (const EditOp* op : {&x, &y}) {
    if (op->is_insert())
      after[op->pos].push_back(op);
    else
      for (std::size_t i = op->pos; i < op->pos + op->length; ++i) base[i].alive = false;
  }
  for (auto& [slot, list] : after)
    std::sort(list.begin(), list.end(), [](const EditOp* a, const EditOp* b) { return a->site < b->site; });
  Text out;
  for (std::size_t slot = 0; slot <= base.size(); ++slot) {
    if (auto it = after.find(slot); it != after.end())
      for (const EditOp* op : it->second) out += op->content;
    if (slot < base.size() && base[slot].alive) out.push_back(base[slot].ch);
  }
  return out;
}

}  // namespace

TEST(ItTransform, Examples) {
  EXPECT_EQ(it_transform(EditOp::ins(3, T("x"), 1), EditOp::ins(1, T("y"), 2)), OpList{EditOp::ins(4, T("x"), 1)});
  EXPECT_EQ(it_transform(EditOp::ins(1, T("x"), 1), EditOp::del(3, 1, 2)), OpList{EditOp::ins(1, T("x"), 1)});
  EXPECT_EQ(it_transform(EditOp::del(2, 1, 1), EditOp::ins(0, T("y"), 2)), OpList{EditOp::del(3, 1, 1)});
  EXPECT_EQ(it_transform(EditOp::ins(2, T("x"), 1), EditOp::ins(2, T("y"), 2), TieBreakPolicy::site_order),
            OpList{EditOp::ins(2, T("x"), 1)});
  EXPECT_EQ(it_transform(EditOp::ins(2, T("y"), 2), EditOp::ins(2, T("x"), 1), TieBreakPolicy::site_order),
            OpList{EditOp::ins(3, T("y"), 2)});
}

TEST(ItTransform, SwallowedDeleteBecomesMarker) {
  auto r = it_transform(EditOp::del(1, 1, 1), EditOp::del(0, 3, 2));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_TRUE(r[0].is_noop());
  EXPECT_EQ(r[0].pos, 0u);
  EXPECT_EQ(S(run(T("abc"), r)), "abc");
}

TEST(ItTransform, DeleteSplitAroundInsert) {
  auto r = it_transform(EditOp::del(1, 3, 1), EditOp::ins(2, T("XY"), 2));
  EXPECT_EQ(S(run(T("abXYcde"), r)), "aXYe");
}

TEST(ItTransform, NaiveLeftKeepsBothInPlace) {
  auto a = EditOp::ins(0, T("x"), 1), b = EditOp::ins(0, T("y"), 2);
  auto at = it_transform(a, b, TieBreakPolicy::naive_left);
  auto bt = it_transform(b, a, TieBreakPolicy::naive_left);
  EXPECT_NE(run(run(T(""), a), bt), run(run(T(""), b), at));
}

// TP1 over every document of length <= 4 on {a,b} and every op pair from
// distinct sites, plus agreement with the identity model.
TEST(ItTransform, Tp1Exhaustive) {
  std::size_t pairs = 0;
  for (const Text& d : docs_up_to(4)) {
    auto xs = ops_on(d, 1);
    auto ys = ops_on(d, 2);
    for (const auto& x : xs)
      for (const auto& y : ys) {
        Text via_x = run(run(d, x), it_transform(y, x));
        Text via_y = run(run(d, y), it_transform(x, y));
        ASSERT_EQ(via_x, via_y) << "doc \"" << S(d) << "\" " << x << " || " << y;
        ASSERT_EQ(via_x, intended(d, x, y)) << "doc \"" << S(d) << "\" " << x << " || " << y;
        ++pairs;
      }
  }
  EXPECT_GT(pairs, 10000u);
}

TEST(TransformPair, ListsConvergeOnRandomInput) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3000; ++trial) {
    Text d;
    for (std::size_t i = rng() % 6; i-- > 0;) d.push_back(U'a' + rng() % 2);
    auto make = [&](SiteId site) {
      OpList ops;
      Text cur = d;
      for (std::size_t k = 1 + rng() % 3; k-- > 0;) {
        auto cands = ops_on(cur, site);
        auto op = cands[rng() % cands.size()];
        apply_ops(cur, {op});
        ops.push_back(op);
      }
      return ops;
    };
    OpList a = make(1), b = make(2);
    auto [a2, b2] = transform_pair(a, b);
    ASSERT_EQ(run(run(d, a), b2), run(run(d, b), a2));
  }
}

TEST(OTReplica, LocalStampsClock) {
  OTReplica r(1);
  auto w = r.local(EditOp::ins(0, T("a")));
  EXPECT_EQ(w.ops, OpList{EditOp::ins(0, T("a"), 1, 1)});
  EXPECT_EQ(w.clock.get(1), 1u);
  EXPECT_EQ(r.local(EditOp::ins(1, T("b"))).clock.get(1), 2u);
  EXPECT_THROW(r.local(EditOp::del(5, 1)), RangeError);
  EXPECT_EQ(S(r.text()), "ab");
}

TEST(OTReplica, RemoteWithoutConcurrencyIsVerbatim) {
  OTReplica a(1), b(2);
  auto w = a.local(EditOp::ins(0, T("hi")));
  auto applied = b.remote(w);
  EXPECT_EQ(applied, OpList{EditOp::ins(0, T("hi"), 1, 1)});
  EXPECT_EQ(b.stats().last_transform_calls, 0u);
  EXPECT_EQ(b.stats().last_concurrent, 0u);
}

TEST(OTReplica, ConcurrentInsertsAtZero) {
  for (int order = 0; order < 2; ++order) {
    OTReplica a(1), b(2);
    auto wa = a.local(EditOp::ins(0, T("x")));
    auto wb = b.local(EditOp::ins(0, T("y")));
    if (order) {
      b.remote(wa);
      a.remote(wb);
    } else {
      a.remote(wb);
      b.remote(wa);
    }
    EXPECT_EQ(S(a.text()), "xy");
    EXPECT_EQ(S(b.text()), "xy");
  }
}

TEST(OTReplica, RejectsOpsThatAreNotReady) {
  OTReplica a(1), b(2);
  a.local(EditOp::ins(0, T("x")));
  auto w2 = a.local(EditOp::ins(0, T("y")));
  EXPECT_THROW(b.remote(w2), CausalityError);
}

TEST(OTReplica, PrunesStableHistory) {
  OTReplica a(1, TieBreakPolicy::site_order, {1, 2}), b(2, TieBreakPolicy::site_order, {1, 2});
  for (int i = 0; i < 20; ++i) {
    auto wa = a.local(EditOp::ins(0, T("a")));
    auto wb = b.local(EditOp::ins(0, T("b")));
    a.remote(wb);
    b.remote(wa);
  }
  EXPECT_EQ(a.text(), b.text());
  EXPECT_LT(a.history_size(), 10u);
}

TEST(OTServer, HeadRevisionPassesThrough) {
  OTServer server;
  OTWireOp w{{EditOp::ins(0, T("a"), 1, 1)}, 1, 1, {}, 0};
  auto out = server.integrate(w);
  EXPECT_EQ(out.ops, w.ops);
  EXPECT_EQ(out.revision, 1u);
}

TEST(OTServer, RebasesBehindConcurrentInsert) {
  OTServer server;
  server.seed(T("abc"));
  server.integrate({{EditOp::ins(0, T("zz"), 1, 1)}, 1, 1, {}, 0});
  auto out = server.integrate({{EditOp::ins(2, T("q"), 2, 1)}, 2, 1, {}, 0});
  EXPECT_EQ(out.ops, OpList{EditOp::ins(4, T("q"), 2, 1)});
  EXPECT_EQ(server.text(), intended(T("abc"), EditOp::ins(0, T("zz"), 1), EditOp::ins(2, T("q"), 2)));
}

TEST(OTServer, FutureRevisionIsStale) {
  OTServer server;
  EXPECT_THROW(server.integrate({{EditOp::ins(0, T("a"), 1, 1)}, 1, 1, {}, 3}), StaleRevisionError);
}

TEST(OTClient, PendingOpRebasesIncoming) {
  OTServer server;
  OTClient c1(1), c2(2);
  auto m2 = c2.local(EditOp::ins(0, T("b")));
  auto m1 = c1.local(EditOp::ins(0, T("a")));
  auto r2 = server.integrate(*m2);
  auto r1 = server.integrate(*m1);
  // c1 still has its op pending when c2's op arrives.
  auto applied = c1.receive(r2);
  EXPECT_EQ(applied, OpList{EditOp::ins(1, T("b"), 2, 1)});
  EXPECT_TRUE(c1.receive(r1).empty());
  c2.receive(r2);
  c2.receive(r1);
  EXPECT_EQ(c1.text(), server.text());
  EXPECT_EQ(c2.text(), server.text());
  EXPECT_EQ(S(server.text()), "ab");
}

TEST(OTClient, BufferedOpsGoOutOnAck) {
  OTServer server;
  OTClient c(1);
  auto first = c.local(EditOp::ins(0, T("a")));
  ASSERT_TRUE(first);
  EXPECT_FALSE(c.local(EditOp::ins(1, T("b"))));
  EXPECT_FALSE(c.local(EditOp::ins(2, T("c"))));
  c.receive(server.integrate(*first));
  auto out = c.take_outbox();
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ops.size(), 2u);
  c.receive(server.integrate(out[0]));
  EXPECT_EQ(S(server.text()), "abc");
  EXPECT_FALSE(c.awaiting_ack());
}
