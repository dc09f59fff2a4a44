#include "musinger/pipeline/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "musinger/core/error.hpp"

namespace musinger::pipeline {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_value(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool set_geometry(display::LinkageGeometry& g, std::string_view key, std::string_view value) {
  double v = 0.0;
  if (key == "branch") {
    if (value == "ElbowOut")
      g.branch = display::Branch::ElbowOut;
    else if (value == "ElbowIn")
      g.branch = display::Branch::ElbowIn;
    else
      throw std::invalid_argument("branch must be ElbowOut or ElbowIn");
    return true;
  }
  double* field = nullptr;
  if (key == "base_separation_mm") field = &g.base_separation_mm;
  if (key == "proximal_length_mm") field = &g.proximal_length_mm;
  if (key == "distal_length_mm") field = &g.distal_length_mm;
  if (key == "angle_min_rad") field = &g.angle_min_rad;
  if (key == "angle_max_rad") field = &g.angle_max_rad;
  if (!field) return false;
  if (!parse_value(value, v)) throw std::invalid_argument("expected a number");
  *field = v;
  return true;
}

void set_key(SystemConfig& c, std::string_view key, std::string_view value) {
  if (key.starts_with("linkage") && key.size() > 9 && key[8] == '.') {
    const int n = key[7] - '0';
    if (n < 1 || n > kChannels) throw std::invalid_argument("linkage index must be 1..3");
    if (!set_geometry(c.display.linkages[static_cast<std::size_t>(n - 1)], key.substr(9), value))
      throw std::invalid_argument("unknown linkage key");
    return;
  }
  bool geometry = false;
  for (auto& g : c.display.linkages) geometry = set_geometry(g, key, value);
  if (geometry) return;

  if (key == "adc_bits" || key == "capacity_frames") {
    long long v = 0;
    if (!parse_value(value, v) || v < 0) throw std::invalid_argument("expected a non-negative integer");
    if (key == "adc_bits")
      c.sensor.adc_bits = static_cast<int>(v);
    else
      c.jitter.capacity_frames = static_cast<std::size_t>(v);
    return;
  }
  double v = 0.0;
  double* field = nullptr;
  if (key == "sample_rate_hz") field = &c.sensor.sample_rate_hz;
  if (key == "target_latency_ms") field = &c.jitter.target_latency_ms;
  if (key == "gap_timeout_ms") field = &c.jitter.gap_timeout_ms;
  if (key == "skin_plane_y_mm") field = &c.display.skin_plane_y_mm;
  if (key == "depth_max_mm") field = &c.display.depth_max_mm;
  if (key == "servo_max_speed_rad_s") field = &c.display.servo_max_speed_rad_s;
  if (key == "tick_rate_hz") field = &c.display.tick_rate_hz;
  if (key == "home_clearance_mm") field = &c.display.home_clearance_mm;
  if (key == "activation_threshold_n") field = &c.sensor.activation_threshold_n;
  if (!field) throw std::invalid_argument("unknown key");
  if (!parse_value(value, v)) throw std::invalid_argument("expected a number");
  *field = v;
  if (key == "activation_threshold_n") c.display.activation_threshold_n = v;
}

void put(std::ostream& os, std::string_view key, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os << key << " = " << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
}

}  // namespace

void SystemConfig::validate() const {
  sensor.validate();
  display.validate();
  jitter.validate(sensor.sample_rate_hz);
}

SystemConfig parse_config(std::string_view text) {
  SystemConfig c;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw Error(Errc::Config, where + "expected key = value", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      set_key(c, key, value);
    } catch (const std::invalid_argument& e) {
      throw Error(Errc::Config, where + std::string(key) + ": " + e.what(), line_no);
    }
  }
  c.validate();
  return c;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const SystemConfig& c) {
  std::ostringstream os;
  put(os, "sample_rate_hz", c.sensor.sample_rate_hz);
  os << "adc_bits = " << c.sensor.adc_bits << '\n';
  put(os, "activation_threshold_n", c.sensor.activation_threshold_n);
  put(os, "target_latency_ms", c.jitter.target_latency_ms);
  put(os, "gap_timeout_ms", c.jitter.gap_timeout_ms);
  os << "capacity_frames = " << c.jitter.capacity_frames << '\n';
  put(os, "skin_plane_y_mm", c.display.skin_plane_y_mm);
  put(os, "depth_max_mm", c.display.depth_max_mm);
  put(os, "servo_max_speed_rad_s", c.display.servo_max_speed_rad_s);
  put(os, "tick_rate_hz", c.display.tick_rate_hz);
  put(os, "home_clearance_mm", c.display.home_clearance_mm);
  for (int i = 0; i < kChannels; ++i) {
    const auto& g = c.display.linkages[static_cast<std::size_t>(i)];
    const std::string p = "linkage" + std::to_string(i + 1) + ".";
    put(os, p + "base_separation_mm", g.base_separation_mm);
    put(os, p + "proximal_length_mm", g.proximal_length_mm);
    put(os, p + "distal_length_mm", g.distal_length_mm);
    put(os, p + "angle_min_rad", g.angle_min_rad);
    put(os, p + "angle_max_rad", g.angle_max_rad);
    os << p << "branch = " << (g.branch == display::Branch::ElbowOut ? "ElbowOut" : "ElbowIn") << '\n';
  }
  return os.str();
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return explicit_path;
  if (const char* env = std::getenv("MUSINGER_CONFIG"); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace musinger::pipeline
