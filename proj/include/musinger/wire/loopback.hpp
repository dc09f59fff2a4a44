#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "musinger/wire/codec.hpp"

namespace musinger::wire {

/// Fault model for the in-process transport.
struct LinkFaults {
  double loss = 0.0;          // drop probability per datagram
  double duplication = 0.0;   // probability of an extra copy
  double jitter_ms = 0.0;     // uniform extra delay in [0, jitter_ms]
  double base_delay_ms = 0.0;
  std::size_t reorder_window = 1;  // >1 shuffles each run of this many datagrams

  void validate() const;
};

/// Simulated unreliable datagram link running on caller-supplied time.
/// Deterministic for a given seed.
class LoopbackLink {
 public:
  struct Delivery {
    std::uint64_t arrival_us;
    std::vector<std::uint8_t> bytes;
  };

  LoopbackLink(LinkFaults faults, std::uint64_t seed);

  void send(std::span<const std::uint8_t> bytes, std::uint64_t send_us);
  /// Releases a partially filled reorder window.
  void flush();
  /// Removes and returns every datagram that has arrived by now_us, in arrival order.
  std::vector<Delivery> receive(std::uint64_t now_us);
  bool idle() const noexcept { return in_flight_.empty() && window_.empty(); }

  std::uint64_t sent() const noexcept { return sent_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  std::uint64_t duplicated() const noexcept { return duplicated_; }

 private:
  void schedule(std::vector<std::uint8_t> bytes, std::uint64_t send_us);
  void release_window();

  LinkFaults faults_;
  std::mt19937_64 rng_;
  std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>> window_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::uint8_t>> in_flight_;
  std::uint64_t order_ = 0;
  std::uint64_t sent_ = 0, dropped_ = 0, duplicated_ = 0;
};

}  // namespace musinger::wire
