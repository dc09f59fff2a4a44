#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include <unistd.h>

#include "doctest.h"
#include "musinger/core/error.hpp"
#include "musinger/melody/melody.hpp"
#include "musinger/pipeline/config.hpp"
#include "musinger/pipeline/live_input.hpp"
#include "musinger/pipeline/simulate.hpp"
#include "musinger/pipeline/stream.hpp"
#include "musinger/pipeline/udp.hpp"
#include "musinger/recorder/sensor.hpp"
#include "musinger/wire/codec.hpp"
#include "support/oracles.hpp"

using namespace musinger;
using namespace musinger::pipeline;
using doctest::Approx;

namespace {

Errc config_error(std::string_view text, int* line = nullptr) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.code();
  }
  return Errc::InvalidInput;
}

// Every source onset matched to a distinct perceived onset on the same
// channel within tol_ms.
bool matches(const RhythmPattern& src, const RhythmPattern& got, double tol_ms) {
  if (src.onsets.size() != got.onsets.size()) return false;
  std::vector<bool> used(got.onsets.size(), false);
  for (const auto& o : src.onsets) {
    bool found = false;
    for (std::size_t j = 0; j < got.onsets.size() && !found; ++j)
      if (!used[j] && got.onsets[j].channel == o.channel && std::abs(got.onsets[j].time_ms - o.time_ms) <= tol_ms)
        used[j] = found = true;
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# demo\n"
      "sample_rate_hz = 200\n"
      "adc_bits = 10   # fewer bits\n"
      "\n"
      "target_latency_ms = 30\n"
      "distal_length_mm = 42\n"
      "linkage2.base_separation_mm = 28\n"
      "branch = ElbowOut\n"
      "activation_threshold_n = 0.5\n");
  CHECK(c.sensor.sample_rate_hz == 200);
  CHECK(c.sensor.adc_bits == 10);
  CHECK(c.jitter.target_latency_ms == 30);
  for (const auto& g : c.display.linkages) CHECK(g.distal_length_mm == 42);
  CHECK(c.display.linkages[0].base_separation_mm == 30);
  CHECK(c.display.linkages[1].base_separation_mm == 28);
  CHECK(c.sensor.activation_threshold_n == 0.5);
  CHECK(c.display.activation_threshold_n == 0.5);

  int line = 0;
  CHECK(config_error("sample_rate_hz = 100\nbogus = 1\n", &line) == Errc::Config);
  CHECK(line == 2);
  CHECK(config_error("sample_rate_hz = fast\n", &line) == Errc::Config);
  CHECK(line == 1);
  CHECK(config_error("no equals sign\n") == Errc::Config);
  CHECK(config_error("linkage4.distal_length_mm = 40\n") == Errc::Config);
  CHECK(config_error("branch = Sideways\n") == Errc::Config);
  CHECK(config_error("sample_rate_hz = 5\n") == Errc::Config);
  CHECK(config_error("target_latency_ms = 150\n") == Errc::Config);
  CHECK(config_error("distal_length_mm = 10\n") == Errc::Config);
}

TEST_CASE("config format round trip") {
  SystemConfig c;
  c.sensor.sample_rate_hz = 125;
  c.display.linkages[2].proximal_length_mm = 24.5;
  c.display.skin_plane_y_mm = -54.25;
  c.jitter.capacity_frames = 100;
  const auto text = format_config(c);
  const auto back = parse_config(text);
  CHECK(format_config(back) == text);
  CHECK(back.display.linkages[2].proximal_length_mm == 24.5);
  CHECK(back.jitter.capacity_frames == 100);
}

TEST_CASE("config file lookup") {
  const std::string path = "test_pipeline_config.txt";
  {
    std::ofstream f(path);
    f << "depth_max_mm = 2\n";
  }
  CHECK(load_config(path).display.depth_max_mm == 2);
  CHECK_THROWS_AS(load_config("does/not/exist.cfg"), Error);
  ::unsetenv("MUSINGER_CONFIG");
  CHECK_FALSE(resolve_config_path(std::nullopt).has_value());
  ::setenv("MUSINGER_CONFIG", path.c_str(), 1);
  CHECK(resolve_config_path(std::nullopt) == path);
  CHECK(resolve_config_path(std::string("other")) == "other");
  ::unsetenv("MUSINGER_CONFIG");
  std::remove(path.c_str());
}

TEST_CASE("single onset survives the lossless pipeline") {
  RhythmPattern p;
  p.onsets = {{0, 1, 100, 1.0}};
  const auto r = simulate_playback(p, {});
  REQUIRE(r.perceived.onsets.size() == 1);
  CHECK(std::abs(r.perceived.onsets[0].time_ms) <= 10);
  CHECK(r.perceived.onsets[0].channel == 1);
  CHECK(r.stats.jitter.played == r.stats.frames_sent);
  CHECK(onset_latency_ms(SystemConfig{}) == Approx(60));
}

TEST_CASE("builtin melodies survive the lossless pipeline") {
  for (auto id : kAllMelodies) {
    const auto& m = melody::builtin_melody(id);
    const auto r = simulate_playback(m, {});
    CHECK(matches(m, r.perceived, 10));
    CHECK(melody::classify_melody(r.perceived) == id);
  }
}

TEST_CASE("display-side re-extraction of random patterns") {
  // The servo needs a few ticks to travel to the skin and back, so onsets
  // shorter than that or closer than that on one channel merge or vanish.
  std::mt19937_64 rng(101);
  for (int i = 0; i < 60; ++i) {
    const auto p = oracle::random_pattern(rng, 10, 100, 50, 10);
    PlaybackOptions opt;
    opt.seed = static_cast<std::uint64_t>(i);
    const auto r = simulate_playback(p, opt);
    CHECK(matches(p, r.perceived, 10));
  }
}

TEST_CASE("playback is deterministic per seed") {
  PlaybackOptions opt;
  opt.faults.loss = 0.1;
  opt.faults.jitter_ms = 20;
  opt.faults.duplication = 0.05;
  opt.seed = 9;
  const auto& m = melody::builtin_melody(MelodyId::B);
  const auto a = simulate_playback(m, opt);
  const auto b = simulate_playback(m, opt);
  CHECK(a.perceived == b.perceived);
  CHECK(a.stats.jitter.held == b.stats.jitter.held);
  opt.seed = 10;
  const auto c = simulate_playback(m, opt);
  CHECK(c.stats.datagrams_received != a.stats.datagrams_received);
}

TEST_CASE("playback observer sees every tick") {
  PlaybackOptions opt;
  std::uint64_t calls = 0, last = 0;
  opt.observer = [&](std::uint64_t tick, const display::DisplayState&) {
    if (calls) CHECK(tick == last + 1);
    last = tick;
    ++calls;
  };
  const auto r = simulate_playback(melody::builtin_melody(MelodyId::A), opt);
  CHECK(calls == r.stats.ticks);
}

TEST_CASE("endpoint parsing") {
  auto e = parse_endpoint("127.0.0.1:47533");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 47533);
  e = parse_endpoint("[::1]:9000");
  CHECK(e.host == "::1");
  CHECK(e.port == 9000);
  e = parse_endpoint(":5000");
  CHECK(e.host.empty());
  CHECK(e.port == 5000);
  e = parse_endpoint("localhost:1");
  CHECK(e.host == "localhost");
  for (const char* bad : {"", "host", "host:", "host:70000", "host:x1", "[::1:5"})
    CHECK_THROWS_AS(parse_endpoint(bad), Error);
}

TEST_CASE("udp round trip and bind conflict") {
  UdpReceiver rx({"127.0.0.1", 0});
  REQUIRE(rx.port() != 0);
  UdpSender tx({"127.0.0.1", rx.port()});
  const auto d = wire::encode_frame(ForceFrame{3, 30000, {1, 2, 3}});
  tx.send(d);
  const auto got = rx.receive(1000);
  REQUIRE(got);
  CHECK(wire::decode_frame(*got).frame.seq == 3);
  CHECK_FALSE(rx.receive(20).has_value());
  try {
    UdpReceiver clash({"127.0.0.1", rx.port()});
    FAIL("expected Network error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Network);
  }
}

TEST_CASE("udp send to a closed port is refused") {
  std::uint16_t port = 0;
  {
    UdpReceiver probe({"127.0.0.1", 0});
    port = probe.port();
  }
  UdpSender tx({"127.0.0.1", port});
  const auto d = wire::encode_frame(ForceFrame{});
  bool refused = false;
  try {
    tx.send(d);
    tx.check_refused(200);
    tx.send(d);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Network);
    refused = true;
  }
  CHECK(refused);
  CHECK_THROWS_AS(UdpSender({"no-such-host.invalid", 1}), Error);
}

TEST_CASE("local channel") {
  LocalChannel ch;
  CHECK_FALSE(ch.receive(5).has_value());
  std::thread t([&] {
    for (std::uint8_t i = 0; i < 100; ++i) {
      const std::array<std::uint8_t, 1> b{i};
      ch.send(b);
    }
  });
  for (int i = 0; i < 100; ++i) {
    const auto got = ch.receive(1000);
    REQUIRE(got);
    CHECK((*got)[0] == i);
  }
  t.join();
}

TEST_CASE("key tapper") {
  KeyTapper k(120);
  auto ev = k.key('j', 0);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].channel == 1);
  CHECK(ev[0].kind == recorder::TapKind::Press);
  CHECK(k.key('x', 0).empty());
  CHECK(k.key('j', 50000).empty());
  CHECK(k.next_deadline() == 170000u);
  CHECK(k.expire(169999).empty());
  ev = k.expire(170000);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == recorder::TapKind::Release);
  CHECK(ev[0].timestamp_us == 170000);
  k.key('k', 200000);
  k.key('l', 210000);
  CHECK(k.release_all(220000).size() == 2);
  CHECK_FALSE(k.next_deadline().has_value());
}

TEST_CASE("real-time receiver over a local channel") {
  LocalChannel ch;
  RhythmPattern p;
  p.onsets = {{0, 1, 100, 1.0}, {250, 2, 100, 0.5}, {500, 3, 100, 1.0}};
  const auto frames = recorder::encode_pattern(p, {});
  std::thread producer([&] {
    const std::array<std::uint8_t, 5> junk{1, 2, 3, 4, 5};
    ch.send(junk);
    send_paced(frames, ch);
  });
  ReceiverOptions opt;
  opt.first_frame_timeout_s = 5;
  const auto r = run_receiver(ch, opt);
  producer.join();
  CHECK(r.completed);
  CHECK(r.stats.malformed == 1);
  CHECK(r.stats.jitter.played == frames.size());
  CHECK(matches(p, r.perceived, 10));
}

TEST_CASE("receiver gives up without frames") {
  LocalChannel ch;
  ReceiverOptions opt;
  opt.first_frame_timeout_s = 0.2;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_receiver(ch, opt);
  CHECK_FALSE(r.completed);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3));
}

TEST_CASE("live sender from a key script") {
  LocalChannel ch;
  int fds[2];
  REQUIRE(::pipe(fds) == 0);
  std::atomic<bool> stop{false};
  LiveSender sender(recorder::SensorConfig{}, ch);
  std::uint64_t sent = 0;
  std::thread t([&] { sent = sender.run(fds[0], 120, &stop); });
  const std::string keys = "j";
  REQUIRE(::write(fds[1], keys.data(), keys.size()) == 1);
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  REQUIRE(::write(fds[1], "q", 1) == 1);
  t.join();
  ::close(fds[0]);
  ::close(fds[1]);
  std::vector<ForceFrame> frames;
  bool eos = false;
  while (auto d = ch.receive(0)) {
    const auto f = wire::decode_frame(*d);
    frames.push_back(f.frame);
    eos = f.end_of_stream;
  }
  CHECK(sent == frames.size());
  CHECK(eos);
  const auto onsets = recorder::frames_to_onsets(frames, {}).onsets;
  REQUIRE(onsets.size() == 1);
  CHECK(onsets[0].channel == 1);
  CHECK(onsets[0].duration_ms == Approx(120).epsilon(0.1));
}
