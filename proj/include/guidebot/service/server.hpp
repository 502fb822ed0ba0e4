#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "guidebot/scenario.hpp"

namespace guidebot {

struct ServerOptions {
  std::string host{"127.0.0.1"};
  unsigned short port{8700};  // 0 picks a free port
  double tick_hz{10.0};
  /// Outgoing messages kept per client; the oldest is dropped beyond this.
  std::size_t queue_limit{32};
};

/// Parses "host:port". Throws std::invalid_argument on malformed input.
void parse_bind(const std::string& bind, ServerOptions& options);

/// Websocket server on /ws (plus GET /health). One simulation loop ticks at
/// tick_hz and broadcasts a snapshot to every client per tick. All I/O and
/// the simulation share one io thread, so the session needs no locking.
class Server {
 public:
  /// Binds immediately; throws boost::system::system_error if the address is taken.
  Server(ScenarioConfig cfg, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  [[nodiscard]] unsigned short port() const;
  /// Serves until stop() is called (from any thread) or SIGINT/SIGTERM when
  /// handle_signals is set.
  void run(bool handle_signals = false);
  void stop();

  struct Impl;  // defined in the source, public only for its helpers

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace guidebot
