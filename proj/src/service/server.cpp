#include "guidebot/service/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <deque>
#include <set>
#include <stdexcept>

#include "guidebot/service/live_session.hpp"

namespace guidebot {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

void parse_bind(const std::string& bind, ServerOptions& options) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    throw std::invalid_argument("bind address must look like host:port, got '" + bind + "'");
  }
  const std::string port = bind.substr(colon + 1);
  std::size_t used = 0;
  int value = -1;
  try {
    value = std::stoi(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || value < 0 || value > 65535) {
    throw std::invalid_argument("invalid port '" + port + "'");
  }
  options.host = bind.substr(0, colon);
  options.port = static_cast<unsigned short>(value);
}

namespace {

class WsClient;

}  // namespace

struct Server::Impl : std::enable_shared_from_this<Server::Impl> {
  Impl(ScenarioConfig cfg, ServerOptions opts)
      : options(std::move(opts)), session(std::move(cfg)), acceptor(ioc), timer(ioc), signals(ioc) {
    if (!(options.tick_hz > 0.0)) throw std::invalid_argument("tick_hz must be positive");
    if (options.queue_limit < 1) throw std::invalid_argument("queue_limit must be >= 1");
    const tcp::endpoint endpoint(net::ip::make_address(options.host), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void start();
  void do_accept();
  void schedule_tick();
  void on_tick();
  void on_message(const std::shared_ptr<WsClient>& client, const std::string& text);

  net::io_context ioc;
  ServerOptions options;
  LiveSession session;
  tcp::acceptor acceptor;
  net::steady_timer timer;
  net::signal_set signals;
  std::chrono::steady_clock::time_point next_tick;
  std::set<std::shared_ptr<WsClient>> clients;
};

namespace {

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket&& socket, std::weak_ptr<Server::Impl> server, std::size_t limit)
      : ws_(std::move(socket)), server_(std::move(server)), limit_(limit) {}

  void start(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      if (auto s = self->server_.lock()) s->clients.insert(self);
      self->do_read();
    });
  }

  void send(std::string msg) {
    pending_.push_back(std::move(msg));
    // Slow readers lose old snapshots rather than stalling the loop.
    while (pending_.size() > limit_) pending_.pop_front();
    if (!writing_) do_write();
  }

  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->drop();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (auto s = self->server_.lock()) s->on_message(self, text);
      self->do_read();
    });
  }

  void do_write() {
    if (pending_.empty()) return;
    inflight_ = std::move(pending_.front());
    pending_.pop_front();
    writing_ = true;
    ws_.async_write(net::buffer(inflight_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->drop();
        return;
      }
      self->do_write();
    });
  }

  void drop() {
    if (auto s = server_.lock()) s->clients.erase(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::weak_ptr<Server::Impl> server_;
  std::size_t limit_;
  std::deque<std::string> pending_;
  std::string inflight_;
  bool writing_{false};
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, std::weak_ptr<Server::Impl> server)
      : stream_(std::move(socket)), server_(std::move(server)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->on_request();
    });
  }

 private:
  void on_request() {
    auto server = server_.lock();
    if (!server) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        auto client =
            std::make_shared<WsClient>(stream_.release_socket(), server_, server->options.queue_limit);
        client->start(std::move(req_));
        return;
      }
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    res->set(http::field::content_type, "text/plain");
    if (req_.method() == http::verb::get && req_.target() == "/health") {
      res->result(http::status::ok);
      res->body() = "ok";
    } else {
      res->result(http::status::not_found);
      res->body() = "not found";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::weak_ptr<Server::Impl> server_;
};

}  // namespace

void Server::Impl::start() {
  do_accept();
  next_tick = std::chrono::steady_clock::now();
  schedule_tick();
}

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
      if (!self->acceptor.is_open()) return;
    } else {
      std::make_shared<HttpConnection>(std::move(socket), self)->start();
    }
    self->do_accept();
  });
}

void Server::Impl::schedule_tick() {
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / options.tick_hz));
  next_tick += period;
  // Fall behind gracefully instead of bursting to catch up.
  const auto now = std::chrono::steady_clock::now();
  if (next_tick < now) next_tick = now;
  timer.expires_at(next_tick);
  timer.async_wait([self = shared_from_this()](beast::error_code ec) {
    if (!ec) self->on_tick();
  });
}

void Server::Impl::on_tick() {
  try {
    const std::string text = session.tick().dump();
    // Copy: a failing send may erase from the set.
    const auto targets = clients;
    for (const auto& c : targets) c->send(text);
  } catch (const std::exception& e) {
    spdlog::error("simulation tick failed: {}", e.what());
  }
  schedule_tick();
}

void Server::Impl::on_message(const std::shared_ptr<WsClient>& client, const std::string& text) {
  std::optional<nlohmann::json> reply;
  try {
    reply = session.handle_command(text);
  } catch (const std::exception& e) {
    reply = nlohmann::json{{"type", "error"}, {"detail", e.what()}};
  }
  if (reply) client->send(reply->dump());
}

Server::Server(ScenarioConfig cfg, ServerOptions options)
    : impl_(std::make_shared<Impl>(std::move(cfg), std::move(options))) {}

Server::~Server() {
  stop();
  // Queued handlers hold the impl alive; cancel everything and drain them.
  beast::error_code ec;
  impl_->acceptor.close(ec);
  impl_->timer.cancel();
  impl_->signals.cancel();
  for (const auto& c : impl_->clients) c->close();
  impl_->clients.clear();
  impl_->ioc.restart();
  impl_->ioc.poll();
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run(bool handle_signals) {
  if (handle_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  impl_->start();
  spdlog::info("serving on {}:{} at {} Hz", impl_->options.host, port(), impl_->options.tick_hz);
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace guidebot
