#include <charconv>
#include <cmath>
#include <string>

#include "musinger/core/error.hpp"
#include "musinger/melody/melody.hpp"

namespace musinger::melody {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void append_number(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

RhythmPattern parse_rhythm_file(std::string_view text) {
  RhythmPattern pattern;
  int line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    if (!header_seen) {
      if (trim(line.substr(0, line.find('#'))) != "MRF1") throw Error(Errc::BadFormat, "expected \"MRF1\" header", line_no);
      header_seen = true;
      continue;
    }
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto tokens = split_ws(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (tokens.size() != 4)
      throw Error(Errc::BadFormat, where + "expected \"time_ms channel duration_ms intensity\"", line_no);
    Onset o;
    if (!parse_number(tokens[0], o.time_ms) || !parse_number(tokens[1], o.channel) ||
        !parse_number(tokens[2], o.duration_ms) || !parse_number(tokens[3], o.intensity) ||
        !std::isfinite(o.time_ms) || !std::isfinite(o.duration_ms) || !std::isfinite(o.intensity))
      throw Error(Errc::BadFormat, where + "malformed number", line_no);
    if (o.channel < 1 || o.channel > kChannels)
      throw Error(Errc::BadChannel, where + "channel " + std::to_string(o.channel) + " outside 1..3", line_no);
    if (o.time_ms < 0.0) throw Error(Errc::BadOrder, where + "negative time", line_no);
    if (!pattern.onsets.empty() && o.time_ms < pattern.onsets.back().time_ms)
      throw Error(Errc::BadOrder, where + "time decreases", line_no);
    if (!(o.duration_ms > 0.0)) throw Error(Errc::BadFormat, where + "duration must be positive", line_no);
    if (!(o.intensity > 0.0 && o.intensity <= 1.0))
      throw Error(Errc::BadFormat, where + "intensity outside (0, 1]", line_no);
    pattern.onsets.push_back(o);
  }
  if (!header_seen) throw Error(Errc::BadFormat, "empty rhythm file", 1);
  validate_pattern(pattern);
  return pattern;
}

std::string serialize_rhythm_file(const RhythmPattern& pattern) {
  std::string out = "MRF1\n";
  for (const Onset& o : pattern.onsets) {
    append_number(out, o.time_ms);
    out += ' ';
    out += std::to_string(o.channel);
    out += ' ';
    append_number(out, o.duration_ms);
    out += ' ';
    append_number(out, o.intensity);
    out += '\n';
  }
  return out;
}

}  // namespace musinger::melody
