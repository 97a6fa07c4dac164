#pragma once

// Headless relay client. Frames in both directions sit in a delay queue for
// the configured latency before they are written or handled, so two clients
// on one machine see each other's edits late and edit concurrently.

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "coedit/relay/mirror.hpp"

namespace coedit::relay {

namespace client_detail {
namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
}  // namespace client_detail

struct HttpReply {
  int status = 0;
  json body;
};

// One blocking request; the body is parsed as JSON when present.
inline HttpReply http_request(const std::string& host, unsigned short port, const std::string& method,
                              const std::string& target, const json& body = nullptr) {
  using namespace client_detail;
  net::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve(host, std::to_string(port)));
  http::request<http::string_body> req(http::string_to_verb(method), target, 11);
  req.set(http::field::host, host);
  if (!body.is_null()) {
    req.set(http::field::content_type, "application/json");
    req.body() = body.dump();
  }
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  HttpReply r;
  r.status = static_cast<int>(res.result_int());
  if (!res.body().empty()) r.body = json::parse(res.body());
  return r;
}

struct ClientOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 0;
  std::string session;
  std::chrono::milliseconds latency{0};  // one way, both directions
  std::chrono::milliseconds join_timeout{5000};
};

class HeadlessClient {
 public:
  using Clock = std::chrono::steady_clock;

  explicit HeadlessClient(ClientOptions opt) : opt_(std::move(opt)), ws_(ioc_), tick_(ioc_) {
    using namespace client_detail;
    tcp::resolver resolver(ioc_);
    beast::get_lowest_layer(ws_).connect(resolver.resolve(opt_.host, std::to_string(opt_.port)));
    ws_.text(true);
    ws_.handshake(opt_.host, "/ws");
    ProtocolMessage join;
    join.kind = Kind::join;
    join.session = opt_.session;
    outbox_.push_back({Clock::now() + opt_.latency, encode(join)});
    read();
    schedule_tick();
    thread_ = std::thread([this] { ioc_.run(); });

    std::unique_lock lock(mu_);
    bool answered = joined_cv_.wait_for(lock, opt_.join_timeout, [&] { return mirror_.has_value() || !error_.empty(); });
    bool ok = mirror_.has_value();
    std::string err = error_;
    lock.unlock();
    if (ok) return;
    close();
    if (!answered) throw std::runtime_error("relay join timed out");
    throw UnknownSession(err);
  }

  ~HeadlessClient() { close(); }

  HeadlessClient(const HeadlessClient&) = delete;
  HeadlessClient& operator=(const HeadlessClient&) = delete;

  // Runs `f(mirror)` on the io thread and returns its result; edits made
  // there are sent after the latency delay.
  template <class F>
  auto with_mirror(F f) {
    using R = decltype(f(std::declval<ClientMirror&>()));
    std::packaged_task<R()> task([this, &f] { return f(*mirror_); });
    auto fut = task.get_future();
    client_detail::net::post(ioc_, [&task] { task(); });
    return fut.get();
  }

  void edit(const EditOp& op) {
    with_mirror([&](ClientMirror& m) {
      edit_locked(m, op);
      return 0;
    });
  }

  // Same as edit(), for use inside with_mirror.
  void edit_locked(ClientMirror& m, const EditOp& op) {
    for (auto& frame : m.edit(op)) queue_out(frame);
  }

  void request_snapshot() {
    with_mirror([&](ClientMirror& m) {
      ProtocolMessage req;
      req.kind = Kind::snapshot;
      req.session = m.session();
      req.site = m.site();
      queue_out(req);
      return 0;
    });
  }

  Text text() {
    return with_mirror([](ClientMirror& m) { return m.text(); });
  }

  SiteId site() {
    return with_mirror([](ClientMirror& m) { return m.site(); });
  }

  // No frame queued either way and no edit awaiting its ack.
  bool quiescent() {
    return with_mirror([this](ClientMirror& m) { return m.idle() && outbox_.empty() && inbox_.empty(); });
  }

  std::string last_error() {
    std::lock_guard lock(mu_);
    return error_;
  }

  std::size_t frames_received() {
    return with_mirror([this](ClientMirror&) { return received_; });
  }

  void close() {
    if (closed_.exchange(true)) return;
    client_detail::net::post(ioc_, [this] {
      tick_.cancel();
      client_detail::beast::error_code ec;
      client_detail::beast::get_lowest_layer(ws_).socket().close(ec);
      ioc_.stop();
    });
    if (thread_.joinable()) thread_.join();
  }

 private:
  struct Pending {
    Clock::time_point due;
    std::string frame;
  };

  void queue_out(const ProtocolMessage& m) { outbox_.push_back({Clock::now() + opt_.latency, encode(m)}); }

  void read() {
    ws_.async_read(buf_, [this](client_detail::beast::error_code ec, std::size_t) {
      if (ec) return;
      inbox_.push_back({Clock::now() + opt_.latency, client_detail::beast::buffers_to_string(buf_.data())});
      buf_.consume(buf_.size());
      read();
    });
  }

  void schedule_tick() {
    tick_.expires_after(std::chrono::milliseconds(1));
    tick_.async_wait([this](client_detail::beast::error_code ec) {
      if (ec) return;
      pump();
      schedule_tick();
    });
  }

  void pump() {
    auto now = Clock::now();
    while (!inbox_.empty() && inbox_.front().due <= now) {
      std::string frame = std::move(inbox_.front().frame);
      inbox_.pop_front();
      handle(frame);
    }
    if (!writing_ && !outbox_.empty() && outbox_.front().due <= now) write();
  }

  void write() {
    writing_ = true;
    current_ = std::move(outbox_.front().frame);
    outbox_.pop_front();
    ws_.async_write(client_detail::net::buffer(current_), [this](client_detail::beast::error_code ec, std::size_t) {
      writing_ = false;
      if (ec) return;
      if (!outbox_.empty() && outbox_.front().due <= Clock::now()) write();
    });
  }

  void handle(const std::string& frame) {
    ++received_;
    ProtocolMessage m = parse_message(frame);
    if (m.kind == Kind::error) {
      std::lock_guard lock(mu_);
      error_ = m.error + ": " + m.message;
      joined_cv_.notify_all();
      return;
    }
    if (!mirror_) {
      if (m.kind != Kind::snapshot) return;
      std::lock_guard lock(mu_);
      mirror_.emplace(m);
      joined_cv_.notify_all();
      return;
    }
    for (auto& out : mirror_->receive(m)) queue_out(out);
  }

  ClientOptions opt_;
  client_detail::net::io_context ioc_;
  client_detail::websocket::stream<client_detail::beast::tcp_stream> ws_;
  client_detail::net::steady_timer tick_;
  client_detail::beast::flat_buffer buf_;
  std::thread thread_;
  std::atomic<bool> closed_{false};

  // io thread only
  std::deque<Pending> inbox_, outbox_;
  std::string current_;
  bool writing_ = false;
  std::size_t received_ = 0;

  std::mutex mu_;
  std::condition_variable joined_cv_;
  std::optional<ClientMirror> mirror_;
  std::string error_;
};

}  // namespace coedit::relay
