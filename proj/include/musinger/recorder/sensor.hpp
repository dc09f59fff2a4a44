#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <vector>

#include "musinger/core/types.hpp"

namespace musinger::recorder {

struct SensorConfig {
  double sample_rate_hz = 100.0;
  int adc_bits = 12;
  double activation_threshold_n = 0.2;

  /// Throws Error(Errc::Config) when a field is outside its allowed range.
  void validate() const;
  std::int32_t adc_max() const noexcept { return (std::int32_t{1} << adc_bits) - 1; }
  /// Frame period in microseconds (fractional for rates that do not divide 1e6).
  double period_us() const noexcept { return 1e6 / sample_rate_hz; }
};

/// FSR + ADC transfer model: linear counts above the activation threshold,
/// saturating at full scale.
std::int32_t fsr_response(double force_n, const SensorConfig& config);

/// Inverse of the ADC scale (not of the threshold).
double adc_to_force(std::int32_t adc_counts, const SensorConfig& config);

/// Force after a sensor round trip, i.e. what the recorder actually reports.
inline double quantize_force(double force_n, const SensorConfig& config) {
  return adc_to_force(fsr_response(force_n, config), config);
}

enum class TapKind { Press, Release };

struct TapEvent {
  int channel = 1;  // 1..3
  TapKind kind = TapKind::Press;
  double force_n = kFullScaleN;  // ignored for Release
  std::uint64_t timestamp_us = 0;
};

/// Turns tap events into frames at the configured rate.
///
/// Frame k is stamped start_us + round(k * period). A channel's force in a
/// frame is the held force of the latest Press with timestamp <= the frame
/// timestamp that has no Release with timestamp <= the frame timestamp, so a
/// release takes effect at the first frame at or after its timestamp.
/// Duplicate presses and releases without a press are ignored.
///
/// submit() may be called from a producer thread while another thread calls
/// advance_to(); events must be submitted in timestamp order per channel.
class TapSampler {
 public:
  TapSampler(SensorConfig config, std::uint64_t start_us, std::uint32_t first_seq = 0);

  void submit(const TapEvent& event);
  /// Emits every frame whose timestamp is <= now_us.
  std::vector<ForceFrame> advance_to(std::uint64_t now_us);
  /// Timestamp of the next frame to be emitted.
  std::uint64_t next_frame_time_us() const;

  const SensorConfig& config() const noexcept { return config_; }

 private:
  void apply(const TapEvent& event);

  SensorConfig config_;
  std::uint64_t start_us_;
  std::uint32_t first_seq_;
  std::uint64_t frame_index_ = 0;
  std::array<double, kChannels> held_{};
  std::array<bool, kChannels> pressed_{};
  mutable std::mutex mutex_;
  std::deque<TapEvent> pending_;
};

/// Batch form: samples `events` over [start_us, end_us).
std::vector<ForceFrame> sample_taps(std::span<const TapEvent> events, const SensorConfig& config,
                                    std::uint64_t start_us, std::uint64_t end_us);

/// Deterministic scripted playback of a rhythm pattern. An onset
/// (t, ch, dur, intensity) puts intensity * 10 N on channel ch for every frame
/// stamped in [t, t + dur); the output ends with one all-zero frame at or
/// after the last onset end.
std::vector<ForceFrame> encode_pattern(const RhythmPattern& pattern, const SensorConfig& config,
                                       std::uint64_t start_us = 0, std::uint32_t first_seq = 0);

/// Recovers onsets from a frame sequence: one onset per maximal run of frames
/// with force at or above the activation threshold on a channel. Times are
/// relative to the first frame.
RhythmPattern frames_to_onsets(std::span<const ForceFrame> frames, const SensorConfig& config);

}  // namespace musinger::recorder
