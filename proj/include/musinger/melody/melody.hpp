#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "musinger/core/types.hpp"

namespace musinger::melody {

// ---- MRF1 rhythm files -----------------------------------------------------
//
//   MRF1
//   # comment
//   <time_ms> <channel 1..3> <duration_ms> <intensity>
//
// Times must be non-decreasing. '#' starts a comment anywhere on a line.

/// Errc::BadFormat (header or malformed line), Errc::BadChannel,
/// Errc::BadOrder; all carry the 1-based line number. Also enforces the
/// remaining RhythmPattern invariants (Errc::Validation).
RhythmPattern parse_rhythm_file(std::string_view text);

/// Canonical MRF1 text: header plus one onset per line, shortest round-trip
/// number formatting, no comments.
std::string serialize_rhythm_file(const RhythmPattern& pattern);

/// The bundled transcription for `id` (assets/melody_<id>.mrf).
const RhythmPattern& builtin_melody(MelodyId id);
std::string_view builtin_melody_source(MelodyId id);

// ---- classification ---------------------------------------------------------

/// Consecutive inter-onset intervals (channel-agnostic) divided by their sum.
/// Coincident onsets count once.
struct IoiSignature {
  std::vector<double> intervals;
};

/// Errc::TooShort for fewer than three distinct onset times.
IoiSignature ioi_signature(const RhythmPattern& pattern);

/// Dynamic-time-warping distance with squared-difference local cost.
double dtw_distance(std::span<const double> a, std::span<const double> b);

using Template = std::pair<MelodyId, IoiSignature>;

/// Signatures of the bundled melodies restricted to `candidates`.
std::vector<Template> builtin_templates(std::span<const MelodyId> candidates = kAllMelodies);

/// argmin of DTW distance; ties go to the lexicographically smaller id.
MelodyId classify_signature(const IoiSignature& signature, std::span<const Template> templates);

MelodyId classify_melody(const RhythmPattern& pattern, std::span<const MelodyId> candidates = kAllMelodies);

/// Median inter-onset interval in milliseconds (distinct onset times).
double median_ioi_ms(const RhythmPattern& pattern);

}  // namespace musinger::melody
