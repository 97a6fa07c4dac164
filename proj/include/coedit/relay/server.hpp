#pragma once

// WebSocket + HTTP front end for the relay, on Boost.Beast. One io thread
// owns every socket and the connection registry; sessions lock themselves.
//
//   POST /sessions            {"engine":"woot","mode":"replica-proxy",...} -> {"session":id,...}
//   GET  /sessions/<id>       current snapshot
//   GET  /health              {"status":"ok","sessions":n}
//   GET  /ws                  WebSocket upgrade; first frame must be a join

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include "coedit/relay/session.hpp"

namespace coedit::relay {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  ManagerOptions manager;
  EngineConfig default_engine{EngineKind::woot};
  Mode default_mode = Mode::replica_proxy;
  std::chrono::milliseconds reap_every{1000};
};

inline std::string error_name(const std::exception& e) {
  if (dynamic_cast<const SequenceGapError*>(&e)) return "SequenceGapError";
  if (dynamic_cast<const StaleRevisionError*>(&e)) return "StaleRevisionError";
  if (dynamic_cast<const UnknownSession*>(&e)) return "UnknownSession";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const PreconditionError*>(&e)) return "PreconditionError";
  if (dynamic_cast<const RangeError*>(&e)) return "RangeError";
  return "Error";
}

class RelayServer {
 public:
  explicit RelayServer(ServerOptions opt = {})
      : opt_(std::move(opt)), sessions_(opt_.manager), acceptor_(ioc_), reaper_(ioc_) {}
  ~RelayServer() { stop(); }

  RelayServer(const RelayServer&) = delete;
  RelayServer& operator=(const RelayServer&) = delete;

  // Binds and serves on a background thread.
  void start() {
    tcp::endpoint ep(net::ip::make_address(opt_.address), opt_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    accept();
    schedule_reap();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  // Serves on the calling thread until stop() is called elsewhere.
  void run() {
    if (!thread_.joinable()) {
      start();
    }
    thread_.join();
  }

  void stop() {
    if (stopped_.exchange(true)) return;
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      reaper_.cancel();
      for (auto& [key, conn] : registry_)
        if (auto c = conn.lock()) c->close();
      ioc_.stop();
    });
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }
  SessionManager& sessions() { return sessions_; }

 private:
  class WsConn;
  using Key = std::pair<std::string, SiteId>;

  void accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket sock) {
      if (ec) return;
      std::make_shared<HttpConn>(*this, std::move(sock))->read();
      accept();
    });
  }

  void schedule_reap() {
    reaper_.expires_after(opt_.reap_every);
    reaper_.async_wait([this](beast::error_code ec) {
      if (ec) return;
      sessions_.reap();
      schedule_reap();
    });
  }

  void dispatch(const std::string& session, const std::vector<Outgoing>& out) {
    for (const auto& o : out) {
      auto it = registry_.find({session, o.to});
      if (it == registry_.end()) continue;
      if (auto c = it->second.lock()) c->send(encode(o.msg));
    }
  }

  http::response<http::string_body> handle_http(const http::request<http::string_body>& req) {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(false);
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    auto reply = [&](http::status st, const json& body) {
      res.result(st);
      res.body() = body.dump();
      res.prepare_payload();
      return res;
    };
    std::string target(req.target());
    try {
      if (req.method() == http::verb::get && target == "/health")
        return reply(http::status::ok, {{"status", "ok"}, {"sessions", sessions_.size()}});
      if (req.method() == http::verb::post && target == "/sessions") {
        json body = req.body().empty() ? json::object() : json::parse(req.body());
        EngineConfig engine = opt_.default_engine;
        if (body.contains("engine")) engine = body.get<EngineConfig>();
        Mode mode = body.contains("mode") ? parse_mode(body.at("mode")) : opt_.default_mode;
        auto id = sessions_.create(engine, mode);
        return reply(http::status::created, {{"session", id}, {"engine", engine}, {"mode", to_string(mode)}});
      }
      const std::string prefix = "/sessions/";
      if (req.method() == http::verb::get && target.rfind(prefix, 0) == 0) {
        auto snap = sessions_.get(target.substr(prefix.size()))->snapshot();
        return reply(http::status::ok, snap);
      }
      return reply(http::status::not_found, {{"error", "NotFound"}, {"message", target}});
    } catch (const UnknownSession& e) {
      return reply(http::status::not_found, {{"error", "UnknownSession"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      return reply(http::status::bad_request, {{"error", error_name(e)}, {"message", e.what()}});
    }
  }

  class HttpConn : public std::enable_shared_from_this<HttpConn> {
   public:
    HttpConn(RelayServer& srv, tcp::socket sock) : srv_(srv), stream_(std::move(sock)) {}

    void read() {
      http::async_read(stream_, buf_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(self->req_)) {
          if (self->req_.target() == "/ws")
            std::make_shared<WsConn>(self->srv_, self->stream_.release_socket())->accept(std::move(self->req_));
          return;
        }
        self->res_ = self->srv_.handle_http(self->req_);
        http::async_write(self->stream_, self->res_, [self](beast::error_code, std::size_t) {
          beast::error_code ignored;
          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
      });
    }

   private:
    RelayServer& srv_;
    beast::tcp_stream stream_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
    http::response<http::string_body> res_;
  };

  class WsConn : public std::enable_shared_from_this<WsConn> {
   public:
    WsConn(RelayServer& srv, tcp::socket sock) : srv_(srv), ws_(std::move(sock)) {}

    void accept(http::request<http::string_body> req) {
      ws_.text(true);
      ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
        if (!ec) self->read();
      });
    }

    void send(std::string frame) {
      queue_.push_back(std::move(frame));
      if (queue_.size() == 1) write();
    }

    void close() {
      beast::error_code ec;
      ws_.next_layer().socket().close(ec);
    }

   private:
    void read() {
      ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
          self->gone();
          return;
        }
        std::string frame = beast::buffers_to_string(self->buf_.data());
        self->buf_.consume(self->buf_.size());
        self->handle(frame);
        self->read();
      });
    }

    void write() {
      ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
          self->queue_.clear();
          return;
        }
        self->queue_.pop_front();
        if (!self->queue_.empty()) self->write();
      });
    }

    void handle(const std::string& frame) {
      try {
        ProtocolMessage msg = parse_message(frame);
        if (!session_) {
          if (msg.kind != Kind::join) throw PreconditionError("first frame must be a join");
          auto s = srv_.sessions_.get(msg.session);
          auto out = s->join();
          session_ = s;
          site_ = out.front().to;
          srv_.registry_[{s->id(), site_}] = weak_from_this();
          srv_.dispatch(s->id(), out);
          return;
        }
        bool leaving = msg.kind == Kind::leave;
        auto out = session_->submit(site_, msg);
        srv_.dispatch(session_->id(), out);
        if (leaving) {
          srv_.registry_.erase({session_->id(), site_});
          session_.reset();
        }
      } catch (const std::exception& e) {
        send(encode(error_message(session_ ? session_->id() : std::string(), error_name(e), e.what())));
      }
    }

    void gone() {
      if (!session_) return;
      srv_.registry_.erase({session_->id(), site_});
      auto out = session_->leave(site_);
      srv_.dispatch(session_->id(), out);
      session_.reset();
    }

    RelayServer& srv_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buf_;
    std::deque<std::string> queue_;
    std::shared_ptr<Session> session_;
    SiteId site_ = 0;
  };

  ServerOptions opt_;
  SessionManager sessions_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  net::steady_timer reaper_;
  std::thread thread_;
  std::atomic<bool> stopped_{false};
  std::map<Key, std::weak_ptr<WsConn>> registry_;
};

}  // namespace coedit::relay
