#include <algorithm>
#include <array>
#include <limits>

#include "musinger/core/error.hpp"
#include "musinger/melody/melody.hpp"

namespace musinger::melody {

namespace detail {
extern const std::array<std::string_view, 4> kMelodyAssets;
}

std::string_view builtin_melody_source(MelodyId id) {
  return detail::kMelodyAssets[static_cast<std::size_t>(melody_index(id))];
}

const RhythmPattern& builtin_melody(MelodyId id) {
  static const std::array<RhythmPattern, 4> patterns = [] {
    std::array<RhythmPattern, 4> out;
    for (MelodyId m : kAllMelodies) {
      auto& p = out[static_cast<std::size_t>(melody_index(m))];
      p = parse_rhythm_file(builtin_melody_source(m));
      p.melody_id = m;
    }
    return out;
  }();
  return patterns[static_cast<std::size_t>(melody_index(id))];
}

namespace {

std::vector<double> distinct_times(const RhythmPattern& pattern) {
  std::vector<double> times;
  times.reserve(pattern.onsets.size());
  for (const auto& o : pattern.onsets) times.push_back(o.time_ms);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

}  // namespace

IoiSignature ioi_signature(const RhythmPattern& pattern) {
  const auto times = distinct_times(pattern);
  if (times.size() < 3)
    throw Error(Errc::TooShort, "rhythm needs at least 3 distinct onset times, got " + std::to_string(times.size()));
  IoiSignature sig;
  sig.intervals.reserve(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) sig.intervals.push_back(times[i] - times[i - 1]);
  double total = 0.0;
  for (double v : sig.intervals) total += v;
  for (double& v : sig.intervals) v /= total;
  return sig;
}

double dtw_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::TooShort, "DTW needs non-empty sequences");
  const double inf = std::numeric_limits<double>::infinity();
  // Two rolling rows over b.
  std::vector<double> prev(b.size() + 1, inf), cur(b.size() + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const double diff = a[i - 1] - b[j - 1];
      cur[j] = diff * diff + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<Template> builtin_templates(std::span<const MelodyId> candidates) {
  std::vector<Template> out;
  for (MelodyId id : candidates) out.emplace_back(id, ioi_signature(builtin_melody(id)));
  return out;
}

MelodyId classify_signature(const IoiSignature& signature, std::span<const Template> templates) {
  if (templates.empty()) throw Error(Errc::InvalidInput, "no candidate melodies");
  const Template* best = nullptr;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& t : templates) {
    const double dist = dtw_distance(signature.intervals, t.second.intervals);
    if (!best || dist < best_distance || (dist == best_distance && t.first < best->first)) {
      best = &t;
      best_distance = dist;
    }
  }
  return best->first;
}

MelodyId classify_melody(const RhythmPattern& pattern, std::span<const MelodyId> candidates) {
  const auto sig = ioi_signature(pattern);
  return classify_signature(sig, builtin_templates(candidates));
}

double median_ioi_ms(const RhythmPattern& pattern) {
  const auto times = distinct_times(pattern);
  if (times.size() < 2) throw Error(Errc::TooShort, "median IOI needs at least 2 distinct onset times");
  std::vector<double> iv;
  for (std::size_t i = 1; i < times.size(); ++i) iv.push_back(times[i] - times[i - 1]);
  std::sort(iv.begin(), iv.end());
  const std::size_t mid = iv.size() / 2;
  return iv.size() % 2 ? iv[mid] : 0.5 * (iv[mid - 1] + iv[mid]);
}

}  // namespace musinger::melody
