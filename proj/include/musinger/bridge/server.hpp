#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "musinger/bridge/messages.hpp"

namespace musinger::bridge {

/// Directory holding the console's static files: $MUSINGER_UI_DIR if set,
/// otherwise the ui/ directory of the source tree.
std::string default_ui_dir();

/// HTTP endpoint for the browser console on one port:
///   GET  /bridge   server-sent event stream, one JSON message per event
///   POST /bridge   one JSON message per request body
///   GET  /...      static files from the UI directory
/// State messages are latest-wins per client so slow clients never queue them.
class BridgeServer {
 public:
  using Handler = std::function<void(const BridgeMessage&)>;
  using Logger = std::function<void(const std::string&)>;

  /// Errc::Io when ui_dir is missing or has no index.html.
  explicit BridgeServer(std::string ui_dir);
  ~BridgeServer();
  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  /// Called on the server's worker threads for every valid inbound message.
  void on_message(Handler handler);
  void on_log(Logger logger);

  /// Binds and serves in the background; port 0 picks a free port, which is
  /// returned. Errc::Network when the port cannot be bound.
  std::uint16_t start(const std::string& host, int port);
  void stop();

  void broadcast(const BridgeMessage& message);
  std::size_t client_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace musinger::bridge
