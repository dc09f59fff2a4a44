#include "musinger/core/types.hpp"

#include <algorithm>
#include <sstream>

#include "musinger/core/error.hpp"

namespace musinger {

bool forces_in_range(const ForceFrame& frame) noexcept {
  return std::all_of(frame.forces.begin(), frame.forces.end(),
                     [](double f) { return f >= 0.0 && f <= kFullScaleN; });
}

char melody_letter(MelodyId id) noexcept { return static_cast<char>('A' + melody_index(id)); }

std::string_view melody_title(MelodyId id) noexcept {
  switch (id) {
    case MelodyId::A: return "Baby Shark";
    case MelodyId::B: return "Happy Birthday";
    case MelodyId::C: return "Jingle Bells";
    case MelodyId::D: return "William Tell Overture (Finale)";
  }
  return "";
}

std::optional<MelodyId> melody_from_letter(char c) noexcept {
  if (c >= 'a' && c <= 'd') c = static_cast<char>(c - 'a' + 'A');
  if (c < 'A' || c > 'D') return std::nullopt;
  return static_cast<MelodyId>(c - 'A');
}

double RhythmPattern::end_ms() const noexcept {
  double end = 0.0;
  for (const auto& o : onsets) end = std::max(end, o.time_ms + o.duration_ms);
  return end;
}

std::vector<std::string> pattern_violations(const RhythmPattern& pattern) {
  std::vector<std::string> out;
  const auto& on = pattern.onsets;
  std::array<int, kChannels> last_on_channel{-1, -1, -1};
  for (std::size_t i = 0; i < on.size(); ++i) {
    const Onset& o = on[i];
    std::ostringstream where;
    where << "onset " << i << " (t=" << o.time_ms << " ms, ch=" << o.channel << ")";
    if (!(o.time_ms >= 0.0)) out.push_back(where.str() + ": negative time");
    if (o.channel < 1 || o.channel > kChannels) {
      out.push_back(where.str() + ": channel outside 1..3");
      continue;
    }
    if (!(o.duration_ms > 0.0)) out.push_back(where.str() + ": duration must be positive");
    if (!(o.intensity > 0.0 && o.intensity <= 1.0))
      out.push_back(where.str() + ": intensity outside (0, 1]");
    if (i > 0 && o.time_ms < on[i - 1].time_ms)
      out.push_back(where.str() + ": earlier than the previous onset");
    int& prev = last_on_channel[static_cast<std::size_t>(o.channel - 1)];
    if (prev >= 0) {
      const Onset& p = on[static_cast<std::size_t>(prev)];
      if (p.time_ms + p.duration_ms > o.time_ms)
        out.push_back(where.str() + ": overlaps onset " + std::to_string(prev) +
                      " on the same channel");
    }
    prev = static_cast<int>(i);
  }
  return out;
}

void validate_pattern(const RhythmPattern& pattern) {
  auto problems = pattern_violations(pattern);
  if (problems.empty()) return;
  std::string msg = "invalid rhythm pattern:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw Error(Errc::Validation, msg);
}

RhythmPattern scale_tempo(const RhythmPattern& pattern, double factor) {
  if (!(factor > 0.0)) throw Error(Errc::InvalidInput, "tempo factor must be positive");
  RhythmPattern out = pattern;
  for (auto& o : out.onsets) {
    o.time_ms *= factor;
    o.duration_ms *= factor;
  }
  return out;
}

std::string_view condition_label(Condition c) noexcept {
  return c.noise == NoiseCondition::NoNoise ? "none" : "white";
}

std::optional<Condition> condition_from_label(std::string_view label) noexcept {
  if (label == "none") return Condition{NoiseCondition::NoNoise};
  if (label == "white") return Condition{NoiseCondition::WhiteNoise};
  return std::nullopt;
}

}  // namespace musinger
