#include "musinger/display/display.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace musinger::display {

void DisplayConfig::validate() const {
  if (!(depth_max_mm > 0.0)) throw Error(Errc::Config, "depth_max_mm must be positive");
  if (!(servo_max_speed_rad_s > 0.0)) throw Error(Errc::Config, "servo_max_speed_rad_s must be positive");
  if (!(tick_rate_hz > 0.0)) throw Error(Errc::Config, "tick_rate_hz must be positive");
  if (!(home_clearance_mm >= 0.0)) throw Error(Errc::Config, "home_clearance_mm must be >= 0");
  for (int ch = 0; ch < kChannels; ++ch) {
    const auto& g = linkages[static_cast<std::size_t>(ch)];
    g.validate();
    const double xc = g.base_separation_mm / 2.0;
    for (double y : {skin_plane_y_mm + home_clearance_mm, skin_plane_y_mm, skin_plane_y_mm - depth_max_mm}) {
      if (!workspace_contains(g, {xc, y}))
        throw Error(Errc::Config, "linkage " + std::to_string(ch + 1) + " cannot reach (" + std::to_string(xc) +
                                      ", " + std::to_string(y) + ") mm");
    }
  }
}

double slew_toward(double from, double to, double max_step) noexcept {
  const double diff = to - from;
  if (std::abs(diff) <= max_step) return to;
  return from + std::copysign(max_step, diff);
}

double force_to_depth(double force_n, const DisplayConfig& config) {
  if (!(force_n >= 0.0)) throw Error(Errc::InvalidInput, "force must be non-negative");
  if (force_n < config.activation_threshold_n) return 0.0;
  return config.depth_max_mm * std::min(force_n, kFullScaleN) / kFullScaleN;
}

HapticDisplay::HapticDisplay(DisplayConfig config) : config_(config) {
  config_.validate();
  for (int ch = 0; ch < kChannels; ++ch) {
    const auto idx = static_cast<std::size_t>(ch);
    const Point2 home = home_point(ch);
    home_angles_[idx] = inverse_kinematics(config_.linkages[idx], home);
    auto& s = state_[idx];
    s.theta1_rad = home_angles_[idx].theta1_rad;
    s.theta2_rad = home_angles_[idx].theta2_rad;
    s.effector_mm = forward_kinematics(config_.linkages[idx], s.theta1_rad, s.theta2_rad);
    s.in_contact = s.effector_mm.y_mm <= config_.skin_plane_y_mm;
    s.contact_depth_mm = std::max(0.0, config_.skin_plane_y_mm - s.effector_mm.y_mm);
  }
}

Point2 HapticDisplay::home_point(int channel) const {
  const auto& g = config_.linkages.at(static_cast<std::size_t>(channel));
  return {g.base_separation_mm / 2.0, config_.skin_plane_y_mm + config_.home_clearance_mm};
}

Point2 HapticDisplay::contact_point(int channel, double depth_mm) const {
  const auto& g = config_.linkages.at(static_cast<std::size_t>(channel));
  return {g.base_separation_mm / 2.0, config_.skin_plane_y_mm - depth_mm};
}

void HapticDisplay::step_linkage(int channel, Point2 target, double dt_s) {
  if (!(dt_s > 0.0)) throw Error(Errc::InvalidInput, "dt must be positive");
  const auto idx = static_cast<std::size_t>(channel);
  const auto& geom = config_.linkages[idx];
  auto& s = state_[idx];

  bool clamped = false;
  auto goal = solve_inverse_kinematics(geom, target);
  if (!goal) {
    clamped = true;
    goal = solve_inverse_kinematics(geom, nearest_reachable(geom, target));
    if (!goal) goal = JointAngles{s.theta1_rad, s.theta2_rad};
  }

  const double max_step = config_.servo_max_speed_rad_s * dt_s;
  double t1 = slew_toward(s.theta1_rad, goal->theta1_rad, max_step);
  double t2 = slew_toward(s.theta2_rad, goal->theta2_rad, max_step);

  // A joint-space straight line can leave the assembled region; shorten the
  // step until it does not.
  std::optional<Point2> p = try_forward_kinematics(geom, t1, t2);
  for (int i = 0; i < 30 && (!p || !elbows_outward(geom, t1, t2, *p)); ++i) {
    t1 = s.theta1_rad + 0.5 * (t1 - s.theta1_rad);
    t2 = s.theta2_rad + 0.5 * (t2 - s.theta2_rad);
    p = try_forward_kinematics(geom, t1, t2);
  }
  if (!p || !elbows_outward(geom, t1, t2, *p)) {
    t1 = s.theta1_rad;
    t2 = s.theta2_rad;
    p = s.effector_mm;
    clamped = true;
  }

  s.theta1_rad = t1;
  s.theta2_rad = t2;
  s.effector_mm = *p;
  s.in_contact = p->y_mm <= config_.skin_plane_y_mm;
  s.contact_depth_mm = std::max(0.0, config_.skin_plane_y_mm - p->y_mm);
  s.target_clamped = clamped;
}

const DisplayState& HapticDisplay::render_tick(const std::array<double, kChannels>& forces_n, double dt_s) {
  for (int ch = 0; ch < kChannels; ++ch) {
    const double depth = force_to_depth(forces_n[static_cast<std::size_t>(ch)], config_);
    step_linkage(ch, depth > 0.0 ? contact_point(ch, depth) : home_point(ch), dt_s);
  }
  return state_;
}

const LinkageState& HapticDisplay::drive_toward(int channel, Point2 target, double dt_s) {
  if (channel < 0 || channel >= kChannels) throw Error(Errc::InvalidInput, "channel index out of range");
  step_linkage(channel, target, dt_s);
  return state_[static_cast<std::size_t>(channel)];
}

int HapticDisplay::contact_lag_ticks() const {
  HapticDisplay probe(config_);
  for (int tick = 1; tick <= 10000; ++tick) {
    probe.render_tick(std::array<double, kChannels>{kFullScaleN, 0.0, 0.0}, config_.tick_s());
    if (probe.state()[0].in_contact) return tick;
  }
  throw Error(Errc::Config, "display never reaches contact");
}

void StateHistory::record(std::uint64_t tick, const DisplayState& state) {
  for (int ch = 0; ch < kChannels; ++ch) rows_.push_back({tick, ch, state[static_cast<std::size_t>(ch)]});
  ticks_ = std::max(ticks_, tick + 1);
}

void StateHistory::write_csv(std::ostream& os) const {
  os << "tick,channel,theta1_rad,theta2_rad,x_mm,y_mm,in_contact,depth_mm\n";
  char buf[256];
  for (const auto& r : rows_) {
    std::snprintf(buf, sizeof buf, "%llu,%d,%.9f,%.9f,%.6f,%.6f,%d,%.6f\n",
                  static_cast<unsigned long long>(r.tick), r.channel + 1, r.state.theta1_rad, r.state.theta2_rad,
                  r.state.effector_mm.x_mm, r.state.effector_mm.y_mm, r.state.in_contact ? 1 : 0,
                  r.state.contact_depth_mm);
    os << buf;
  }
}

StateHistory StateHistory::read_csv(std::istream& is) {
  StateHistory h;
  std::string line;
  int line_no = 0;
  if (!std::getline(is, line) || line.rfind("tick,channel,", 0) != 0)
    throw Error(Errc::BadFormat, "state history: missing CSV header", 1);
  ++line_no;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    unsigned long long tick = 0;
    int channel = 0, contact = 0;
    LinkageState s;
    if (!(ss >> tick >> channel >> s.theta1_rad >> s.theta2_rad >> s.effector_mm.x_mm >> s.effector_mm.y_mm >>
          contact >> s.contact_depth_mm) ||
        channel < 1 || channel > kChannels)
      throw Error(Errc::BadFormat, "state history: malformed row", line_no);
    s.in_contact = contact != 0;
    h.rows_.push_back({tick, channel - 1, s});
    h.ticks_ = std::max<std::uint64_t>(h.ticks_, tick + 1);
  }
  return h;
}

RhythmPattern extract_onsets(const StateHistory& history, const OnsetExtraction& options) {
  std::array<std::map<std::uint64_t, const LinkageState*>, kChannels> per_channel;
  for (const auto& r : history.rows()) per_channel[static_cast<std::size_t>(r.channel)][r.tick] = &r.state;

  const double period_ms = 1000.0 / options.tick_rate_hz;
  RhythmPattern out;
  for (int ch = 0; ch < kChannels; ++ch) {
    const auto& ticks = per_channel[static_cast<std::size_t>(ch)];
    bool open = false;
    std::uint64_t start = 0, last = 0;
    double peak = 0.0;
    auto close = [&] {
      Onset o;
      o.time_ms = std::max(0.0, static_cast<double>(start) * period_ms - options.latency_ms);
      o.channel = ch + 1;
      o.duration_ms = static_cast<double>(last - start + 1) * period_ms;
      o.intensity = std::clamp(peak / options.depth_max_mm, 1e-9, 1.0);
      out.onsets.push_back(o);
      open = false;
    };
    for (const auto& [tick, s] : ticks) {
      const bool contiguous = open && tick == last + 1;
      if (open && (!s->in_contact || !contiguous)) close();
      if (s->in_contact) {
        if (!open) {
          open = true;
          start = tick;
          peak = 0.0;
        }
        last = tick;
        peak = std::max(peak, s->contact_depth_mm);
      }
    }
    if (open) close();
  }
  std::stable_sort(out.onsets.begin(), out.onsets.end(),
                   [](const Onset& a, const Onset& b) { return a.time_ms < b.time_ms; });
  return out;
}

}  // namespace musinger::display
