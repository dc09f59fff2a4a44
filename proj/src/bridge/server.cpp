#include "musinger/bridge/server.hpp"

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "httplib.h"
#include "musinger/core/error.hpp"

#ifndef MUSINGER_UI_DIR
#define MUSINGER_UI_DIR "ui"
#endif

namespace musinger::bridge {

std::string default_ui_dir() {
  if (const char* env = std::getenv("MUSINGER_UI_DIR"); env && *env) return env;
  return MUSINGER_UI_DIR;
}

namespace {

struct Client {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::string> queue;
  std::optional<std::string> latest_state;
  bool closed = false;
};

}  // namespace

struct BridgeServer::Impl {
  std::string ui_dir;
  httplib::Server server;
  std::thread thread;
  Handler handler;
  Logger logger;
  mutable std::mutex clients_mutex;
  std::set<std::shared_ptr<Client>> clients;

  void log(const std::string& message) {
    if (logger) logger(message);
  }
};

BridgeServer::BridgeServer(std::string ui_dir) : impl_(std::make_unique<Impl>()) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(ui_dir) || !fs::exists(fs::path(ui_dir) / "index.html"))
    throw Error(Errc::Io, "console assets not found in " + ui_dir);
  impl_->ui_dir = std::move(ui_dir);
  Impl* impl = impl_.get();

  impl->server.Get("/bridge", [impl](const httplib::Request&, httplib::Response& res) {
    auto client = std::make_shared<Client>();
    {
      std::lock_guard lock(impl->clients_mutex);
      impl->clients.insert(client);
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [client](std::size_t, httplib::DataSink& sink) {
          std::deque<std::string> out;
          {
            std::unique_lock lock(client->mutex);
            client->cv.wait_for(lock, std::chrono::milliseconds(500), [&] {
              return client->closed || !client->queue.empty() || client->latest_state.has_value();
            });
            if (client->closed) {
              sink.done();
              return true;
            }
            out.swap(client->queue);
            if (client->latest_state) {
              out.push_back(std::move(*client->latest_state));
              client->latest_state.reset();
            }
          }
          if (out.empty()) out.emplace_back();
          for (const auto& m : out) {
            const std::string event = m.empty() ? std::string(": keepalive\n\n") : "data: " + m + "\n\n";
            if (!sink.write(event.data(), event.size())) return false;
          }
          return true;
        },
        [impl, client](bool) {
          std::lock_guard lock(impl->clients_mutex);
          impl->clients.erase(client);
        });
  });

  impl->server.Post("/bridge", [impl](const httplib::Request& req, httplib::Response& res) {
    try {
      std::string warning;
      const auto message = parse_message(req.body, &warning);
      if (!message) {
        impl->log(warning);
        res.status = 202;
        return;
      }
      if (impl->handler) impl->handler(*message);
      res.status = 204;
    } catch (const Error& e) {
      impl->log(std::string("bridge: ") + e.what());
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });

  if (!impl->server.set_mount_point("/", impl->ui_dir))
    throw Error(Errc::Io, "cannot serve console assets from " + impl->ui_dir);
}

BridgeServer::~BridgeServer() { stop(); }

void BridgeServer::on_message(Handler handler) { impl_->handler = std::move(handler); }
void BridgeServer::on_log(Logger logger) { impl_->logger = std::move(logger); }

std::uint16_t BridgeServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0)
    bound = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port))
    bound = -1;
  if (bound <= 0) throw Error(Errc::Network, "cannot bind console port " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([impl = impl_.get()] { impl->server.listen_after_bind(); });
  return static_cast<std::uint16_t>(bound);
}

void BridgeServer::stop() {
  {
    std::lock_guard lock(impl_->clients_mutex);
    for (const auto& c : impl_->clients) {
      std::lock_guard client_lock(c->mutex);
      c->closed = true;
      c->cv.notify_all();
    }
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void BridgeServer::broadcast(const BridgeMessage& message) {
  const std::string text = to_json(message);
  const bool is_state = std::holds_alternative<StateMessage>(message);
  std::lock_guard lock(impl_->clients_mutex);
  for (const auto& c : impl_->clients) {
    {
      std::lock_guard client_lock(c->mutex);
      if (is_state)
        c->latest_state = text;
      else
        c->queue.push_back(text);
    }
    c->cv.notify_one();
  }
}

std::size_t BridgeServer::client_count() const {
  std::lock_guard lock(impl_->clients_mutex);
  return impl_->clients.size();
}

}  // namespace musinger::bridge
