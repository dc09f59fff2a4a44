#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "musinger/core/types.hpp"
#include "musinger/display/kinematics.hpp"

namespace musinger::display {

struct DisplayConfig {
  std::array<LinkageGeometry, kChannels> linkages{};
  double skin_plane_y_mm = -55.0;
  double depth_max_mm = 3.0;
  double servo_max_speed_rad_s = 8.0;
  double tick_rate_hz = 100.0;
  /// Forces below this render no contact (matches the recorder threshold).
  double activation_threshold_n = 0.2;
  /// Height of the rest pose above the skin plane.
  double home_clearance_mm = 5.0;

  /// Checks every linkage plus reachability of the home pose, the skin plane
  /// and full depth at each linkage's x-centre.
  void validate() const;
  double tick_s() const noexcept { return 1.0 / tick_rate_hz; }
};

/// One rate-limited servo step: `to` when within max_step of `from`,
/// otherwise from +/- max_step.
double slew_toward(double from, double to, double max_step) noexcept;

/// Rendered penetration depth for a channel force: 0 below the activation
/// threshold, otherwise depth_max * min(force, 10) / 10.
double force_to_depth(double force_n, const DisplayConfig& config);

struct LinkageState {
  double theta1_rad = 0.0;
  double theta2_rad = 0.0;
  Point2 effector_mm;
  bool in_contact = false;
  double contact_depth_mm = 0.0;
  /// Set when the commanded target was unreachable and got clamped.
  bool target_clamped = false;
};

using DisplayState = std::array<LinkageState, kChannels>;

/// Three independent inverted five-bar linkages laid out along the forearm.
/// Each one lives in its own plane; its x-centre is d/2 of its geometry.
/// Zero force commands the home pose, any rendered depth commands the point
/// (x_centre, skin_plane_y - depth). Motors slew toward the IK solution at
/// no more than servo_max_speed per second.
class HapticDisplay {
 public:
  explicit HapticDisplay(DisplayConfig config);

  const DisplayConfig& config() const noexcept { return config_; }
  const DisplayState& state() const noexcept { return state_; }

  Point2 home_point(int channel) const;  // channel 0-based
  Point2 contact_point(int channel, double depth_mm) const;

  const DisplayState& render_tick(const std::array<double, kChannels>& forces_n, double dt_s);
  const DisplayState& render_tick(const ForceFrame& frame, double dt_s) {
    return render_tick(frame.forces, dt_s);
  }
  /// Silence: every channel retracts.
  const DisplayState& render_silence(double dt_s) { return render_tick(std::array<double, kChannels>{}, dt_s); }

  /// Direct trajectory drive for slide sensations: moves one linkage toward
  /// an arbitrary point under the same rate limit.
  const LinkageState& drive_toward(int channel, Point2 target, double dt_s);

  /// Ticks from the first contact-commanding frame until the effector is in
  /// contact, starting from home. Used to line up extracted onsets.
  int contact_lag_ticks() const;

 private:
  void step_linkage(int channel, Point2 target, double dt_s);

  DisplayConfig config_;
  DisplayState state_{};
  std::array<JointAngles, kChannels> home_angles_{};
};

struct HistoryRow {
  std::uint64_t tick = 0;
  int channel = 0;  // 0-based
  LinkageState state;
};

class StateHistory {
 public:
  void record(std::uint64_t tick, const DisplayState& state);
  const std::vector<HistoryRow>& rows() const noexcept { return rows_; }
  std::uint64_t ticks() const noexcept { return ticks_; }

  /// CSV with header tick,channel,theta1_rad,theta2_rad,x_mm,y_mm,in_contact,depth_mm
  /// and 1-based channels.
  void write_csv(std::ostream& os) const;
  static StateHistory read_csv(std::istream& is);

 private:
  std::vector<HistoryRow> rows_;
  std::uint64_t ticks_ = 0;
};

struct OnsetExtraction {
  double tick_rate_hz = 100.0;
  double depth_max_mm = 3.0;
  /// Subtracted from every onset time (transport latency + mechanical lag).
  double latency_ms = 0.0;
};

/// One onset per maximal in-contact run per channel: time = first contact
/// tick, duration = run length, intensity = peak depth / depth_max.
RhythmPattern extract_onsets(const StateHistory& history, const OnsetExtraction& options);

}  // namespace musinger::display
