#include <random>
#include <thread>

#include "doctest.h"
#include "musinger/core/error.hpp"
#include "musinger/recorder/sensor.hpp"
#include "support/oracles.hpp"

using namespace musinger;
using namespace musinger::recorder;

TEST_CASE("fsr response") {
  const SensorConfig c;
  CHECK(fsr_response(0.0, c) == 0);
  CHECK(fsr_response(0.19, c) == 0);
  CHECK(fsr_response(10.0, c) == 4095);
  CHECK(fsr_response(25.0, c) == 4095);
  CHECK(fsr_response(5.0, c) == 2048);
  CHECK_THROWS_AS(fsr_response(-0.1, c), Error);
}

TEST_CASE("adc to force") {
  const SensorConfig c;
  CHECK(adc_to_force(4095, c) == 10.0);
  CHECK(adc_to_force(0, c) == 0.0);
  CHECK(adc_to_force(2048, c) == doctest::Approx(10.0 * 2048 / 4095).epsilon(1e-15));
  CHECK(adc_to_force(2048, c) == doctest::Approx(5.0012).epsilon(1e-5));
  CHECK_THROWS_AS(adc_to_force(4096, c), Error);
  CHECK_THROWS_AS(adc_to_force(-1, c), Error);
}

TEST_CASE("sensor config limits") {
  SensorConfig c;
  CHECK_NOTHROW(c.validate());
  c.sample_rate_hz = 9;
  CHECK_THROWS_AS(c.validate(), Error);
  c.sample_rate_hz = 1000;
  CHECK_NOTHROW(c.validate());
  c.adc_bits = 17;
  CHECK_THROWS_AS(c.validate(), Error);
  c.adc_bits = 8;
  CHECK(c.adc_max() == 255);
}

TEST_CASE("quantization error stays within one count") {
  std::mt19937_64 rng(3);
  for (int bits : {8, 12, 16}) {
    SensorConfig c;
    c.adc_bits = bits;
    std::uniform_real_distribution<double> f(0.2, 10.0);
    const double lsb = 10.0 / c.adc_max();
    for (int i = 0; i < 100000; ++i) {
      const double x = f(rng);
      CHECK(std::abs(quantize_force(x, c) - x) <= lsb);
    }
  }
}

TEST_CASE("sample_taps without events is silent") {
  const SensorConfig c;
  const auto frames = sample_taps({}, c, 0, 1'000'000);
  CHECK(frames.size() == 100);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    CHECK(frames[k].seq == k);
    CHECK(frames[k].timestamp_us == k * 10000);
    CHECK(frames[k].forces == std::array<double, 3>{});
  }
}

TEST_CASE("press and release at exact frame boundaries") {
  const SensorConfig c;
  const std::vector<TapEvent> ev{{1, TapKind::Press, 10.0, 0}, {1, TapKind::Release, 0.0, 50000}};
  const auto frames = sample_taps(ev, c, 0, 100000);
  REQUIRE(frames.size() == 10);
  for (int k = 0; k < 5; ++k) CHECK(frames[k].forces[0] == 10.0);
  for (int k = 5; k < 10; ++k) CHECK(frames[k].forces[0] == 0.0);
}

TEST_CASE("held press reports the quantized force") {
  const SensorConfig c;
  const std::vector<TapEvent> ev{{2, TapKind::Press, 5.0, 0}};
  for (const auto& f : sample_taps(ev, c, 0, 300000)) {
    CHECK(f.forces[1] == 10.0 * 2048 / 4095);
    CHECK(f.forces[0] == 0.0);
  }
}

TEST_CASE("duplicate presses and orphan releases are ignored") {
  const SensorConfig c;
  const std::vector<TapEvent> ev{{3, TapKind::Release, 0, 0},
                                 {3, TapKind::Press, 10.0, 10000},
                                 {3, TapKind::Press, 2.0, 20000},
                                 {3, TapKind::Release, 0, 40000}};
  const auto frames = sample_taps(ev, c, 0, 60000);
  CHECK(frames[0].forces[2] == 0.0);
  CHECK(frames[1].forces[2] == 10.0);
  CHECK(frames[3].forces[2] == 10.0);
  CHECK(frames[4].forces[2] == 0.0);
}

TEST_CASE("frame count over a duration") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rate(10, 1000);
  std::uniform_int_distribution<std::uint64_t> dur(0, 3'000'000), start(0, 1'000'000'000);
  for (int i = 0; i < 2000; ++i) {
    SensorConfig c;
    c.sample_rate_hz = rate(rng);
    const auto t0 = start(rng), T = dur(rng);
    const auto n = static_cast<double>(sample_taps({}, c, t0, t0 + T).size());
    const double expected = std::floor(static_cast<double>(T) / 1e6 * c.sample_rate_hz);
    CHECK(std::abs(n - expected) <= 1.0);
  }
}

TEST_CASE("sampler fed from another thread") {
  const SensorConfig c;
  TapSampler sampler(c, 0);
  std::thread producer([&] {
    for (int i = 0; i < 50; ++i) {
      const std::uint64_t t = static_cast<std::uint64_t>(i) * 40000;
      sampler.submit({1 + i % 3, TapKind::Press, 8.0, t});
      sampler.submit({1 + i % 3, TapKind::Release, 0.0, t + 20000});
    }
  });
  producer.join();
  std::vector<ForceFrame> all;
  for (std::uint64_t now = 0; now < 2'000'000; now += 7000) {
    auto part = sampler.advance_to(now);
    all.insert(all.end(), part.begin(), part.end());
  }
  CHECK(sampler.next_frame_time_us() == all.size() * 10000);
  const auto onsets = frames_to_onsets(all, c).onsets;
  REQUIRE(onsets.size() == 50);
  for (int i = 0; i < 50; ++i) {
    CHECK(onsets[i].time_ms == doctest::Approx(i * 40.0));
    CHECK(onsets[i].channel == 1 + i % 3);
    CHECK(onsets[i].duration_ms == doctest::Approx(20.0));
  }
  CHECK_THROWS_AS(sampler.submit({0, TapKind::Press, 1.0, 0}), Error);
}

TEST_CASE("concurrent submit and advance") {
  const SensorConfig c;
  TapSampler sampler(c, 0);
  std::atomic<bool> done{false};
  std::thread producer([&] {
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t t = 1'000'000 + static_cast<std::uint64_t>(i) * 20000;
      sampler.submit({1, TapKind::Press, 10.0, t});
      sampler.submit({1, TapKind::Release, 0.0, t + 10000});
    }
    done = true;
  });
  std::vector<ForceFrame> all;
  std::uint64_t now = 0;
  while (!done) {
    auto part = sampler.advance_to(now);
    all.insert(all.end(), part.begin(), part.end());
    now += 1000;
    if (now > 900'000) now = 900'000;
  }
  producer.join();
  auto rest = sampler.advance_to(6'000'000);
  all.insert(all.end(), rest.begin(), rest.end());
  for (std::size_t k = 1; k < all.size(); ++k) CHECK(all[k].seq == all[k - 1].seq + 1);
  CHECK(frames_to_onsets(all, c).onsets.size() == 200);
}

TEST_CASE("encode_pattern examples") {
  const SensorConfig c;
  SUBCASE("single onset") {
    RhythmPattern p;
    p.onsets = {{0, 1, 100, 1.0}};
    const auto f = encode_pattern(p, c);
    REQUIRE(f.size() == 11);
    for (int k = 0; k < 10; ++k) CHECK(f[k].forces[0] == 10.0);
    CHECK(f[10].forces == std::array<double, 3>{});
  }
  SUBCASE("empty") {
    const auto f = encode_pattern({}, c);
    REQUIRE(f.size() == 1);
    CHECK(f[0].forces == std::array<double, 3>{});
  }
  SUBCASE("simultaneous channels") {
    RhythmPattern p;
    p.onsets = {{20, 1, 50, 0.5}, {20, 3, 50, 0.7}};
    for (const auto& fr : encode_pattern(p, c)) CHECK((fr.forces[0] > 0) == (fr.forces[2] > 0));
  }
  SUBCASE("invalid pattern") {
    RhythmPattern p;
    p.onsets = {{0, 1, 100, 1.0}, {50, 1, 100, 1.0}};
    CHECK_THROWS_AS(encode_pattern(p, c), Error);
  }
}

TEST_CASE("encode then re-extract recovers onsets") {
  std::mt19937_64 rng(17);
  for (double rate : {100.0, 50.0, 250.0}) {
    SensorConfig c;
    c.sample_rate_hz = rate;
    const double period = 1000.0 / rate;
    for (int trial = 0; trial < 500; ++trial) {
      // A run of frames needs a non-empty sampling window and a zero frame
      // between two onsets on the same channel.
      const auto p = oracle::random_pattern(rng, 20, period, period);
      const auto back = frames_to_onsets(encode_pattern(p, c), c).onsets;
      REQUIRE(back.size() == p.onsets.size());
      std::vector<bool> used(back.size(), false);
      for (const auto& o : p.onsets) {
        bool found = false;
        for (std::size_t j = 0; j < back.size() && !found; ++j)
          if (!used[j] && back[j].channel == o.channel && std::abs(back[j].time_ms - o.time_ms) <= period) {
            used[j] = true;
            found = true;
          }
        CHECK(found);
      }
    }
  }
}
