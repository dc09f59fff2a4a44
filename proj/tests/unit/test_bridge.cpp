#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "musinger/bridge/messages.hpp"
#include "musinger/bridge/server.hpp"
#include "musinger/core/error.hpp"
#include "musinger/display/display.hpp"

using namespace musinger;
using namespace musinger::bridge;

namespace {

Errc parse_error(std::string_view text) {
  try {
    parse_message(text);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidInput;
}

bool wait_for(const std::function<bool()>& pred, int ms = 3000) {
  const auto end = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

// Reads SSE events from GET /bridge on a background thread.
struct EventReader {
  std::mutex mutex;
  std::vector<std::string> events;
  std::atomic<bool> stop{false};
  std::thread thread;

  explicit EventReader(std::uint16_t port) {
    thread = std::thread([this, port] {
      httplib::Client cli("127.0.0.1", port);
      cli.set_read_timeout(5, 0);
      std::string buffer;
      cli.Get("/bridge", [&](const char* data, std::size_t n) {
        buffer.append(data, n);
        for (auto pos = buffer.find("\n\n"); pos != std::string::npos; pos = buffer.find("\n\n")) {
          const std::string block = buffer.substr(0, pos);
          buffer.erase(0, pos + 2);
          if (block.rfind("data: ", 0) == 0) {
            std::lock_guard lock(mutex);
            events.push_back(block.substr(6));
          }
        }
        return !stop.load();
      });
    });
  }
  std::vector<std::string> snapshot() {
    std::lock_guard lock(mutex);
    return events;
  }
  ~EventReader() {
    stop = true;
    thread.join();
  }
};

}  // namespace

TEST_CASE("messages round trip through JSON") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 500; ++i) {
    StateMessage s;
    s.tick = rng() >> 12;
    for (auto& l : s.linkages) l = {u(rng) - 5, -u(rng) - 50, (rng() & 1) != 0, u(rng) / 3};
    const std::vector<BridgeMessage> all{
        TapMessage{1 + static_cast<int>(rng() % 3), (rng() & 1) ? recorder::TapKind::Press : recorder::TapKind::Release,
                   std::round(u(rng) * 1000) / 1000, rng() >> 11},
        s, PromptMessage{static_cast<int>(rng() % 12)}, AnswerMessage{kAllMelodies[rng() % 4]}};
    for (const auto& m : all) {
      const auto back = parse_message(to_json(m));
      REQUIRE(back.has_value());
      CHECK(*back == m);
      CHECK(to_json(*back) == to_json(m));
    }
  }
}

TEST_CASE("wire examples from the console") {
  const auto tap = parse_message(R"({"type":"tap","channel":2,"kind":"Press","force_n":10,"t_us":1234})");
  REQUIRE(tap);
  const auto& t = std::get<TapMessage>(*tap);
  CHECK(t.channel == 2);
  CHECK(t.kind == recorder::TapKind::Press);
  const auto ev = to_tap_event(t, 99);
  CHECK(ev.channel == 2);
  CHECK(ev.timestamp_us == 99);
  CHECK(ev.force_n == 10);

  const auto j = nlohmann::json::parse(to_json(AnswerMessage{MelodyId::C}));
  CHECK(j == nlohmann::json::parse(R"({"type":"answer","melody":"C"})"));
  CHECK(nlohmann::json::parse(to_json(PromptMessage{4})) == nlohmann::json::parse(R"({"type":"prompt","trial_index":4})"));

  display::HapticDisplay d{display::DisplayConfig{}};
  const auto sm = state_message(7, d.state());
  CHECK(sm.tick == 7);
  CHECK(sm.linkages[0].x_mm == d.state()[0].effector_mm.x_mm);
  const auto sj = nlohmann::json::parse(to_json(sm));
  CHECK(sj["type"] == "state");
  CHECK(sj["linkages"].size() == 3);
  CHECK(sj["linkages"][0].contains("in_contact"));
}

TEST_CASE("unknown types are ignored with a warning") {
  std::string warning;
  CHECK_FALSE(parse_message(R"({"type":"hello"})", &warning).has_value());
  CHECK(warning.find("hello") != std::string::npos);
  warning.clear();
  CHECK_FALSE(parse_message(R"({"channel":1})", &warning).has_value());
  CHECK_FALSE(warning.empty());
}

TEST_CASE("malformed messages are rejected") {
  for (const char* bad : {"not json", "[1,2]", R"({"type":"tap","channel":4,"kind":"Press","force_n":1,"t_us":0})",
                          R"({"type":"tap","channel":1,"kind":"Tap","force_n":1,"t_us":0})",
                          R"({"type":"tap","channel":1,"kind":"Press","force_n":11,"t_us":0})",
                          R"({"type":"tap","channel":1,"kind":"Press","force_n":1,"t_us":-5})",
                          R"({"type":"answer","melody":"E"})", R"({"type":"answer","melody":"c"})",
                          R"({"type":"state","tick":1,"linkages":[]})", R"({"type":"prompt"})"})
    CHECK(parse_error(bad) == Errc::BadFormat);
}

TEST_CASE("server needs its assets") {
  CHECK_THROWS_AS(BridgeServer("/definitely/not/here"), Error);
  const auto empty = std::filesystem::temp_directory_path() / "musinger_empty_ui";
  std::filesystem::create_directories(empty);
  try {
    BridgeServer s(empty.string());
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Io);
  }
  std::filesystem::remove_all(empty);
}

TEST_CASE("server serves the console and bridges messages") {
  BridgeServer server(MUSINGER_SOURCE_UI);
  std::mutex mutex;
  std::vector<BridgeMessage> inbound;
  std::vector<std::string> logs;
  server.on_message([&](const BridgeMessage& m) {
    std::lock_guard lock(mutex);
    inbound.push_back(m);
  });
  server.on_log([&](const std::string& m) {
    std::lock_guard lock(mutex);
    logs.push_back(m);
  });
  const auto port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body.find("<html") != std::string::npos);
  res = cli.Get("/app.js");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = cli.Post("/bridge", R"({"type":"answer","melody":"B"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 204);
  res = cli.Post("/bridge", R"({"type":"mystery"})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 202);
  res = cli.Post("/bridge", "{{", "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  {
    std::lock_guard lock(mutex);
    REQUIRE(inbound.size() == 1);
    CHECK(std::get<AnswerMessage>(inbound[0]).melody == MelodyId::B);
    CHECK(logs.size() == 2);
  }

  {
    EventReader reader(port);
    REQUIRE(wait_for([&] { return server.client_count() == 1; }));
    server.broadcast(PromptMessage{3});
    REQUIRE(wait_for([&] { return !reader.snapshot().empty(); }));
    CHECK(parse_message(reader.snapshot()[0]) == BridgeMessage{PromptMessage{3}});

    // A burst of states collapses to the newest one for a client that is
    // not keeping up; the last state always arrives.
    for (std::uint64_t t = 0; t < 2000; ++t) server.broadcast(StateMessage{t, {}});
    REQUIRE(wait_for([&] {
      const auto ev = reader.snapshot();
      return ev.back() == to_json(StateMessage{1999, {}});
    }));
    const auto ev = reader.snapshot();
    CHECK(ev.size() < 2000);
    std::uint64_t prev = 0;
    for (std::size_t i = 1; i < ev.size(); ++i) {
      const auto m = parse_message(ev[i]);
      REQUIRE(m);
      const auto tick = std::get<StateMessage>(*m).tick;
      CHECK(tick >= prev);
      prev = tick;
    }
  }
  server.stop();
}

TEST_CASE("ui directory override") {
  ::setenv("MUSINGER_UI_DIR", "/tmp/somewhere", 1);
  CHECK(default_ui_dir() == "/tmp/somewhere");
  ::unsetenv("MUSINGER_UI_DIR");
  CHECK_FALSE(default_ui_dir().empty());
}
