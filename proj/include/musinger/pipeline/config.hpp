#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "musinger/display/display.hpp"
#include "musinger/recorder/sensor.hpp"
#include "musinger/wire/jitter_buffer.hpp"

namespace musinger::pipeline {

/// Everything a process needs to record, transport and render.
struct SystemConfig {
  recorder::SensorConfig sensor;
  wire::JitterBufferConfig jitter;
  display::DisplayConfig display;

  /// Validates each part plus the jitter buffer against the sample rate.
  void validate() const;
};

// Config files hold one `key = value` per line; '#' starts a comment.
// Keys are the field names: sample_rate_hz, adc_bits, activation_threshold_n,
// target_latency_ms, gap_timeout_ms, capacity_frames, skin_plane_y_mm,
// depth_max_mm, servo_max_speed_rad_s, tick_rate_hz, home_clearance_mm and the
// geometry keys base_separation_mm, proximal_length_mm, distal_length_mm,
// angle_min_rad, angle_max_rad, branch (ElbowOut | ElbowIn). A bare geometry
// key sets all three linkages; `linkage2.distal_length_mm` sets one.
// activation_threshold_n applies to both the sensor and the display.

/// Errc::Config with the line number for unknown keys or bad values; the
/// result is validated.
SystemConfig parse_config(std::string_view text);
/// Errc::Io when the file cannot be read.
SystemConfig load_config(const std::string& path);
/// Canonical text that parse_config maps back to the same config.
std::string format_config(const SystemConfig& config);

/// The explicit path if given, otherwise $MUSINGER_CONFIG if set.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path);

}  // namespace musinger::pipeline
