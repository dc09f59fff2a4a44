#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "musinger/recorder/sensor.hpp"

namespace musinger::pipeline {

/// Keyboard tapping without key-up events: j, k, l press channels 1-3 and
/// each press auto-releases hold_ms after the most recent key repeat.
class KeyTapper {
 public:
  explicit KeyTapper(double hold_ms = 120.0, double force_n = kFullScaleN);

  /// Events caused by one key; other keys produce none.
  std::vector<recorder::TapEvent> key(char c, std::uint64_t now_us);
  /// Releases whose hold expired at or before now_us.
  std::vector<recorder::TapEvent> expire(std::uint64_t now_us);
  std::vector<recorder::TapEvent> release_all(std::uint64_t now_us);
  /// Earliest pending auto-release, if any channel is held.
  std::optional<std::uint64_t> next_deadline() const;

 private:
  std::uint64_t hold_us_;
  double force_n_;
  std::array<std::optional<std::uint64_t>, kChannels> release_at_{};
};

/// Puts a terminal stdin into non-canonical, no-echo mode for its lifetime.
/// Does nothing when stdin is not a terminal.
class TerminalRawMode {
 public:
  TerminalRawMode();
  ~TerminalRawMode();
  TerminalRawMode(const TerminalRawMode&) = delete;
  TerminalRawMode& operator=(const TerminalRawMode&) = delete;

 private:
  bool active_ = false;
  unsigned char saved_[64]{};
};

}  // namespace musinger::pipeline
