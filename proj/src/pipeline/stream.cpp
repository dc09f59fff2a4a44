#include "musinger/pipeline/stream.hpp"

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "musinger/core/clock.hpp"
#include "musinger/pipeline/live_input.hpp"
#include "musinger/wire/codec.hpp"

namespace musinger::pipeline {

namespace {

bool stopped(const std::atomic<bool>* stop) { return stop && stop->load(); }

void sleep_until_us(std::uint64_t t_us) {
  const auto now = monotonic_now();
  if (t_us > now) std::this_thread::sleep_for(std::chrono::microseconds(t_us - now));
}

}  // namespace

ReceiveResult run_receiver(DatagramSource& source, const ReceiverOptions& options) {
  const SystemConfig& cfg = options.config;
  cfg.validate();
  wire::JitterBuffer buffer(cfg.jitter);
  display::HapticDisplay display(cfg.display);
  ReceiveResult result;

  std::atomic<bool> done{false};
  std::atomic<std::uint64_t> received{0}, malformed{0}, last_arrival{0};
  std::thread network([&] {
    wire::LoopbackLink link(options.faults, options.seed);
    auto deliver = [&](std::span<const std::uint8_t> bytes, std::uint64_t arrival) {
      wire::DecodedFrame decoded;
      if (wire::try_decode_frame(bytes, decoded) != wire::DecodeStatus::Ok) {
        ++malformed;
        return;
      }
      buffer.push(decoded.frame, arrival, decoded.end_of_stream);
    };
    while (!done.load()) {
      auto bytes = source.receive(5);
      const auto now = monotonic_now();
      if (bytes) {
        ++received;
        last_arrival = now;
        link.send(*bytes, now);
        link.flush();
      }
      for (const auto& d : link.receive(now)) deliver(d.bytes, d.arrival_us);
    }
  });

  const double tick_us = 1e6 / cfg.display.tick_rate_hz;
  const double dt = cfg.display.tick_s();
  const auto begin = monotonic_now();
  std::uint64_t k = 0, tick = 0;
  for (;; ++k) {
    sleep_until_us(begin + static_cast<std::uint64_t>(static_cast<double>(k) * tick_us));
    if (stopped(options.stop)) break;
    const auto now = monotonic_now();
    const auto playout = buffer.pop(now);
    if (playout.kind == wire::PlayoutKind::Stalled) {
      if (options.first_frame_timeout_s > 0.0 &&
          static_cast<double>(now - begin) > options.first_frame_timeout_s * 1e6)
        break;
      continue;
    }
    const auto& state = display.render_tick(playout.forces(), dt);
    result.history.record(tick, state);
    if (options.observer) options.observer(tick, state);
    ++tick;
    const bool at_rest = !state[0].in_contact && !state[1].in_contact && !state[2].in_contact;
    if (at_rest && buffer.finished()) {
      result.completed = true;
      break;
    }
    const bool quiet = static_cast<double>(now - last_arrival.load()) > options.end_silence_s * 1e6;
    if (at_rest && playout.kind == wire::PlayoutKind::Silence && quiet && buffer.size() == 0) {
      result.completed = true;
      break;
    }
  }
  done = true;
  network.join();

  result.stats.datagrams_received = received.load();
  result.stats.malformed = malformed.load();
  result.stats.jitter = buffer.stats();
  result.stats.ticks = tick;
  result.perceived = display::extract_onsets(result.history, onset_extraction(cfg));
  return result;
}

std::uint64_t send_paced(std::span<const ForceFrame> frames, DatagramSink& sink, const std::atomic<bool>* stop) {
  if (frames.empty()) return 0;
  const auto begin = monotonic_now();
  const auto t0 = frames.front().timestamp_us;
  std::uint64_t sent = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (stopped(stop)) {
      ForceFrame last = frames[i];
      last.forces = {};
      sink.send(wire::encode_frame(last, true));
      return sent + 1;
    }
    sleep_until_us(begin + (frames[i].timestamp_us - t0));
    sink.send(wire::encode_frame(frames[i], i + 1 == frames.size()));
    ++sent;
  }
  return sent;
}

LiveSender::LiveSender(recorder::SensorConfig sensor, DatagramSink& sink)
    : sampler_(sensor, monotonic_now()), sink_(sink) {}

void LiveSender::flush(std::uint64_t now_us) {
  for (const auto& f : sampler_.advance_to(now_us)) {
    sink_.send(wire::encode_frame(f));
    ++sent_;
  }
}

std::uint64_t LiveSender::run(int input_fd, double hold_ms, const std::atomic<bool>* stop) {
  KeyTapper tapper(hold_ms);
  const bool ends_with_input = input_fd >= 0;
  bool quit = false;
  while (!quit && !stopped(stop)) {
    auto now = monotonic_now();
    std::uint64_t deadline = sampler_.next_frame_time_us();
    if (const auto d = tapper.next_deadline()) deadline = std::min(deadline, *d);
    const int timeout_ms = deadline > now ? static_cast<int>((deadline - now + 999) / 1000) : 0;
    if (input_fd >= 0) {
      pollfd p{input_fd, POLLIN, 0};
      if (::poll(&p, 1, timeout_ms) > 0) {
        char buf[64];
        const auto n = ::read(input_fd, buf, sizeof buf);
        if (n <= 0) input_fd = -1;
        now = monotonic_now();
        for (ssize_t i = 0; i < n; ++i) {
          if (buf[i] == 'q' || buf[i] == 'Q' || buf[i] == 4) {
            quit = true;
            break;
          }
          for (const auto& e : tapper.key(buf[i], now)) sampler_.submit(e);
        }
      }
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(timeout_ms));
    }
    now = monotonic_now();
    for (const auto& e : tapper.expire(now)) sampler_.submit(e);
    flush(now);
    // Closed input ends the stream once every held key has been released.
    if (ends_with_input && input_fd < 0 && !tapper.next_deadline()) quit = true;
  }
  const auto now = monotonic_now();
  for (const auto& e : tapper.release_all(now)) sampler_.submit(e);
  flush(now);
  auto tail = sampler_.advance_to(sampler_.next_frame_time_us());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    tail[i].forces = {};
    sink_.send(wire::encode_frame(tail[i], i + 1 == tail.size()));
    ++sent_;
  }
  return sent_;
}

}  // namespace musinger::pipeline
