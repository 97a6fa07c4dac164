#pragma once

// Relay wire protocol: one JSON object per WebSocket text frame.
//
//   client -> server   join, op, snapshot, leave
//   server -> client   snapshot, joined, leave, op, patch, ack, error
//
// In replica-proxy and transforming-server modes an op carries
// position-based EditOps plus the link revision the client had seen; in
// pure-relay mode it carries an engine wire op instead.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coedit/serialize.hpp"

namespace coedit::relay {

enum class Mode { pure_relay, transforming_server, replica_proxy };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::pure_relay: return "pure-relay";
    case Mode::transforming_server: return "transforming-server";
    case Mode::replica_proxy: return "replica-proxy";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "pure-relay") return Mode::pure_relay;
  if (s == "transforming-server") return Mode::transforming_server;
  if (s == "replica-proxy") return Mode::replica_proxy;
  throw ConfigError("unknown relay mode '" + s + "'");
}

enum class Kind { join, joined, leave, op, patch, ack, snapshot, error };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::join: return "join";
    case Kind::joined: return "joined";
    case Kind::leave: return "leave";
    case Kind::op: return "op";
    case Kind::patch: return "patch";
    case Kind::ack: return "ack";
    case Kind::snapshot: return "snapshot";
    case Kind::error: return "error";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::join, Kind::joined, Kind::leave, Kind::op, Kind::patch, Kind::ack, Kind::snapshot, Kind::error})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown message kind '" + s + "'");
}

struct ProtocolMessage {
  Kind kind = Kind::error;
  std::string session;
  SiteId site = 0;            // sender, or origin of a forwarded op
  std::uint64_t seq = 0;      // per-sender message sequence, from 1
  std::uint64_t revision = 0;  // link revision (ops, patches, acks, snapshots)
  OpList ops;                      // position-based payload
  std::optional<WireOp> wire;      // pure-relay payload
  std::optional<std::string> text;  // snapshot text, UTF-8
  std::vector<WireOp> log;          // pure-relay snapshot: ops to replay
  std::vector<SiteId> members;
  std::optional<EngineConfig> engine;
  std::optional<Mode> mode;
  std::optional<std::uint64_t> resume;  // join: last link revision seen
  std::string error;                    // error class name
  std::string message;

  friend bool operator==(const ProtocolMessage&, const ProtocolMessage&) = default;
};

inline void to_json(json& j, const ProtocolMessage& m) {
  j = {{"kind", to_string(m.kind)}};
  if (!m.session.empty()) j["session"] = m.session;
  if (m.site) j["site"] = m.site;
  if (m.seq) j["seq"] = m.seq;
  if (m.kind == Kind::op || m.kind == Kind::patch || m.kind == Kind::ack || m.kind == Kind::snapshot)
    j["revision"] = m.revision;
  if (!m.ops.empty() || ((m.kind == Kind::op || m.kind == Kind::patch) && !m.wire)) j["ops"] = m.ops;
  if (m.wire) j["wire"] = *m.wire;
  if (m.text) j["text"] = *m.text;
  if (!m.log.empty()) j["log"] = m.log;
  if (!m.members.empty() || m.kind == Kind::joined || m.kind == Kind::leave) j["members"] = m.members;
  if (m.engine) j["engine"] = *m.engine;
  if (m.mode) j["mode"] = to_string(*m.mode);
  if (m.resume) j["resume"] = *m.resume;
  if (!m.error.empty()) j["error"] = m.error;
  if (!m.message.empty()) j["message"] = m.message;
}

inline void from_json(const json& j, ProtocolMessage& m) {
  m = {};
  m.kind = parse_kind(j.at("kind"));
  m.session = j.value("session", std::string());
  m.site = j.value("site", SiteId{0});
  m.seq = j.value("seq", std::uint64_t{0});
  m.revision = j.value("revision", std::uint64_t{0});
  if (j.contains("ops")) m.ops = j.at("ops").get<OpList>();
  if (j.contains("wire")) m.wire = j.at("wire").get<WireOp>();
  if (j.contains("text")) m.text = j.at("text").get<std::string>();
  if (j.contains("log")) m.log = j.at("log").get<std::vector<WireOp>>();
  if (j.contains("members")) m.members = j.at("members").get<std::vector<SiteId>>();
  if (j.contains("engine")) m.engine = j.at("engine").get<EngineConfig>();
  if (j.contains("mode")) m.mode = parse_mode(j.at("mode"));
  if (j.contains("resume")) m.resume = j.at("resume").get<std::uint64_t>();
  m.error = j.value("error", std::string());
  m.message = j.value("message", std::string());
}

// Parses one frame; anything malformed becomes a ConfigError.
inline ProtocolMessage parse_message(const std::string& frame) {
  try {
    return json::parse(frame).get<ProtocolMessage>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed message: ") + e.what());
  }
}

inline std::string encode(const ProtocolMessage& m) { return json(m).dump(); }

inline ProtocolMessage error_message(const std::string& session, const std::string& error, const std::string& what) {
  ProtocolMessage m;
  m.kind = Kind::error;
  m.session = session;
  m.error = error;
  m.message = what;
  return m;
}

}  // namespace coedit::relay
