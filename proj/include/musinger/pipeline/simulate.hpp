#pragma once

#include <cstdint>
#include <functional>

#include "musinger/display/display.hpp"
#include "musinger/pipeline/config.hpp"
#include "musinger/wire/loopback.hpp"

namespace musinger::pipeline {

using StateObserver = std::function<void(std::uint64_t tick, const display::DisplayState& state)>;

/// Receive-side counters of one stream.
struct StreamStats {
  std::uint64_t frames_sent = 0;
  std::uint64_t datagrams_received = 0;
  std::uint64_t malformed = 0;
  wire::JitterStats jitter;
  std::uint64_t ticks = 0;
};

/// Shift between a frame's timestamp and the rendered contact onset it
/// produces: playout delay plus the servo travel from home to the skin.
double onset_latency_ms(const SystemConfig& config);

display::OnsetExtraction onset_extraction(const SystemConfig& config);

struct PlaybackOptions {
  SystemConfig config;
  wire::LinkFaults faults;
  std::uint64_t seed = 0;
  StateObserver observer;  // optional, called after every tick
};

struct PlaybackResult {
  display::StateHistory history;
  RhythmPattern perceived;
  StreamStats stats;
};

/// Runs recorder -> datagrams -> loopback link -> jitter buffer -> display on
/// simulated time, one display tick at a time, until the stream has ended
/// and every linkage is out of contact. Deterministic for a given seed.
PlaybackResult simulate_playback(const RhythmPattern& pattern, const PlaybackOptions& options);

}  // namespace musinger::pipeline
