#pragma once

// Networked convergence drill: a relay on a loopback port, a few headless
// clients behind artificial latency, random concurrent edits, then a wait
// for every text (clients and server replicas) to agree.

#include <random>

#include "coedit/relay/client.hpp"
#include "coedit/relay/server.hpp"

namespace coedit::relay {

struct E2EOptions {
  EngineConfig engine{EngineKind::woot};
  Mode mode = Mode::replica_proxy;
  int clients = 2;
  int ops_per_client = 100;
  std::chrono::milliseconds latency{100};
  std::chrono::milliseconds spacing{4};  // between rounds of edits
  std::chrono::milliseconds settle_limit{2000};
  std::uint64_t seed = 1;
};

struct E2EReport {
  bool converged = false;
  long settle_ms = -1;  // from the last edit until all texts agreed
  int ops = 0;
  std::vector<Text> client_texts;
  std::map<SiteId, Text> server_texts;
  Text server_text;
  std::string error;
};

inline void to_json(json& j, const E2EReport& r) {
  json clients = json::array();
  for (const auto& t : r.client_texts) clients.push_back(to_utf8(t));
  j = {{"converged", r.converged}, {"settle_ms", r.settle_ms}, {"ops", r.ops},
       {"server_text", to_utf8(r.server_text)}, {"client_texts", clients}};
  if (!r.error.empty()) j["error"] = r.error;
}

namespace detail {

inline EditOp random_edit(const Text& doc, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 9);
  if (doc.empty() || coin(rng) < 7) {
    std::uniform_int_distribution<std::size_t> at(0, doc.size());
    std::uniform_int_distribution<int> ch(0, 25);
    return EditOp::ins(at(rng), Text(1, U'a' + ch(rng)));
  }
  std::uniform_int_distribution<std::size_t> at(0, doc.size() - 1);
  return EditOp::del(at(rng), 1);
}

}  // namespace detail

inline E2EReport run_e2e(const E2EOptions& opt) {
  using Clock = std::chrono::steady_clock;
  E2EReport rep;
  RelayServer server;
  server.start();
  try {
    json body = opt.engine;
    body["mode"] = to_string(opt.mode);
    auto created = http_request("127.0.0.1", server.port(), "POST", "/sessions", body);
    if (created.status != 201) throw ConfigError(created.body.dump());
    std::string id = created.body.at("session");

    std::vector<std::unique_ptr<HeadlessClient>> clients;
    for (int i = 0; i < opt.clients; ++i)
      clients.push_back(std::make_unique<HeadlessClient>(ClientOptions{"127.0.0.1", server.port(), id, opt.latency}));

    std::mt19937_64 rng(opt.seed);
    for (int round = 0; round < opt.ops_per_client; ++round) {
      for (auto& c : clients) {
        c->with_mirror([&](ClientMirror& m) {
          EditOp op = detail::random_edit(m.text(), rng);
          c->edit_locked(m, op);
          return 0;
        });
        ++rep.ops;
      }
      std::this_thread::sleep_for(opt.spacing);
    }
    auto last_edit = Clock::now();

    auto session = server.sessions().get(id);
    auto agreed = [&] {
      for (auto& c : clients)
        if (!c->quiescent()) return false;
      Text ref = session->text();
      for (auto& c : clients)
        if (c->text() != ref) return false;
      for (const auto& [site, t] : session->replica_texts())
        if (t != ref) return false;
      return true;
    };
    while (!agreed()) {
      if (Clock::now() - last_edit > opt.settle_limit) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    rep.converged = agreed();
    if (rep.converged)
      rep.settle_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - last_edit).count();
    for (auto& c : clients) {
      rep.client_texts.push_back(c->text());
      std::string err = c->last_error();
      if (!err.empty() && rep.error.empty()) rep.error = err;
    }
    rep.server_text = session->text();
    rep.server_texts = session->replica_texts();
    if (!rep.error.empty()) rep.converged = false;
    for (auto& c : clients) c->close();
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.converged = false;
  }
  server.stop();
  return rep;
}

}  // namespace coedit::relay
