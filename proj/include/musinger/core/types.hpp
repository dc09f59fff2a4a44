#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace musinger {

inline constexpr int kChannels = 3;
/// Sensor full scale in newtons (the "-10" in SP200-10).
inline constexpr double kFullScaleN = 10.0;

/// One 3-channel force sample. Channels are 0-based here (index, middle,
/// ring finger); user-facing formats label them 1..3.
struct ForceFrame {
  std::uint32_t seq = 0;
  std::uint64_t timestamp_us = 0;
  std::array<double, kChannels> forces{};

  bool operator==(const ForceFrame&) const = default;
};

/// True when every channel force lies in [0, kFullScaleN].
bool forces_in_range(const ForceFrame& frame) noexcept;

enum class MelodyId { A, B, C, D };

inline constexpr std::array<MelodyId, 4> kAllMelodies = {MelodyId::A, MelodyId::B,
                                                         MelodyId::C, MelodyId::D};

char melody_letter(MelodyId id) noexcept;
std::string_view melody_title(MelodyId id) noexcept;
std::optional<MelodyId> melody_from_letter(char c) noexcept;
inline int melody_index(MelodyId id) noexcept { return static_cast<int>(id); }

struct Onset {
  double time_ms = 0.0;
  int channel = 1;  // 1..3
  double duration_ms = 0.0;
  double intensity = 1.0;  // fraction of full scale, (0, 1]

  bool operator==(const Onset&) const = default;
};

struct RhythmPattern {
  std::optional<MelodyId> melody_id;
  std::vector<Onset> onsets;

  double end_ms() const noexcept;
  bool operator==(const RhythmPattern&) const = default;
};

/// Describes every invariant violation; empty when the pattern is valid.
std::vector<std::string> pattern_violations(const RhythmPattern& pattern);

/// Throws Error(Errc::Validation) listing the offending onsets.
void validate_pattern(const RhythmPattern& pattern);

/// Multiplies every onset time and duration by `factor` (> 0).
RhythmPattern scale_tempo(const RhythmPattern& pattern, double factor);

enum class NoiseCondition { NoNoise, WhiteNoise };

struct Condition {
  NoiseCondition noise = NoiseCondition::NoNoise;
  bool operator==(const Condition&) const = default;
};

/// Trial-log spelling: "none" / "white".
std::string_view condition_label(Condition c) noexcept;
std::optional<Condition> condition_from_label(std::string_view label) noexcept;

}  // namespace musinger
