#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>

#include "musinger/core/types.hpp"

namespace musinger::wire {

struct JitterBufferConfig {
  double target_latency_ms = 40.0;
  double gap_timeout_ms = 100.0;
  std::size_t capacity_frames = 64;

  /// Checks latency < gap timeout and capacity >= 2 * latency * frame rate.
  void validate(double frame_rate_hz) const;
};

enum class PlayoutKind {
  Frame,    // a fresh frame, played exactly once
  Held,     // hold-last concealment of a missing frame
  Silence,  // all-zero forces after the gap timeout (or end of stream)
  Stalled,  // nothing has arrived yet
};

struct Playout {
  PlayoutKind kind = PlayoutKind::Stalled;
  /// Frame for Frame/Held; zero forces for Silence and Stalled.
  ForceFrame frame;

  std::array<double, kChannels> forces() const noexcept {
    return (kind == PlayoutKind::Frame || kind == PlayoutKind::Held) ? frame.forces
                                                                      : std::array<double, kChannels>{};
  }
};

struct JitterStats {
  std::uint64_t accepted = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t late = 0;
  std::uint64_t overflow = 0;
  std::uint64_t played = 0;
  std::uint64_t held = 0;
  std::uint64_t silence = 0;
  std::uint64_t skipped = 0;  // seqs never played (lost or too late)
};

/// Receive-side reordering buffer with fixed playout delay.
///
/// The first frame fixes the sender-to-receiver clock offset; afterwards a
/// frame plays at timestamp + offset + target_latency. Duplicates and frames
/// at or behind the playout point are rejected. When the next frame is not
/// yet due, pop() repeats the last frame until gap_timeout has elapsed since
/// the last fresh frame's playout time, then yields Silence.
///
/// Single producer (push) and single consumer (pop); both sides may live on
/// different threads.
class JitterBuffer {
 public:
  explicit JitterBuffer(JitterBufferConfig config = {});

  bool push(const ForceFrame& frame, std::uint64_t arrival_us, bool end_of_stream = false);
  Playout pop(std::uint64_t now_us);

  /// True once the end-of-stream frame has been played.
  bool finished() const;
  JitterStats stats() const;
  std::size_t size() const;
  const JitterBufferConfig& config() const noexcept { return config_; }

 private:
  std::uint64_t playout_time(const ForceFrame& f) const;

  JitterBufferConfig config_;
  mutable std::mutex mutex_;
  std::map<std::uint32_t, ForceFrame> pending_;
  std::optional<std::int64_t> offset_us_;
  std::optional<std::uint32_t> last_played_seq_;
  std::optional<std::uint32_t> end_seq_;
  ForceFrame last_frame_;
  std::uint64_t last_playout_us_ = 0;
  bool finished_ = false;
  JitterStats stats_;
};

}  // namespace musinger::wire
