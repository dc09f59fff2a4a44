#include "musinger/recorder/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "musinger/core/error.hpp"

namespace musinger::recorder {

void SensorConfig::validate() const {
  if (!(sample_rate_hz >= 10.0 && sample_rate_hz <= 1000.0))
    throw Error(Errc::Config, "sample_rate_hz must be in [10, 1000]");
  if (adc_bits < 8 || adc_bits > 16) throw Error(Errc::Config, "adc_bits must be in [8, 16]");
  if (!(activation_threshold_n >= 0.0 && activation_threshold_n <= kFullScaleN))
    throw Error(Errc::Config, "activation_threshold_n must be in [0, 10]");
}

std::int32_t fsr_response(double force_n, const SensorConfig& config) {
  if (!(force_n >= 0.0))
    throw Error(Errc::InvalidInput, "force must be non-negative, got " + std::to_string(force_n));
  if (force_n < config.activation_threshold_n) return 0;
  const double fraction = std::min(force_n, kFullScaleN) / kFullScaleN;
  // lround rounds halfway cases away from zero.
  return static_cast<std::int32_t>(std::lround(config.adc_max() * fraction));
}

double adc_to_force(std::int32_t adc_counts, const SensorConfig& config) {
  if (adc_counts < 0 || adc_counts > config.adc_max())
    throw Error(Errc::InvalidInput, "ADC counts out of range: " + std::to_string(adc_counts));
  return kFullScaleN * adc_counts / config.adc_max();
}

namespace {

std::uint64_t frame_time(std::uint64_t start_us, std::uint64_t index, double period_us) {
  return start_us + static_cast<std::uint64_t>(std::llround(static_cast<double>(index) * period_us));
}

}  // namespace

TapSampler::TapSampler(SensorConfig config, std::uint64_t start_us, std::uint32_t first_seq)
    : config_(config), start_us_(start_us), first_seq_(first_seq) {
  config_.validate();
}

void TapSampler::submit(const TapEvent& event) {
  if (event.channel < 1 || event.channel > kChannels)
    throw Error(Errc::InvalidInput, "tap channel outside 1..3");
  std::lock_guard lock(mutex_);
  pending_.push_back(event);
}

std::uint64_t TapSampler::next_frame_time_us() const {
  std::lock_guard lock(mutex_);
  return frame_time(start_us_, frame_index_, config_.period_us());
}

void TapSampler::apply(const TapEvent& event) {
  const auto ch = static_cast<std::size_t>(event.channel - 1);
  if (event.kind == TapKind::Press) {
    if (pressed_[ch]) return;
    pressed_[ch] = true;
    held_[ch] = quantize_force(std::max(event.force_n, 0.0), config_);
  } else {
    pressed_[ch] = false;
    held_[ch] = 0.0;
  }
}

std::vector<ForceFrame> TapSampler::advance_to(std::uint64_t now_us) {
  std::lock_guard lock(mutex_);
  std::vector<ForceFrame> out;
  for (;;) {
    const std::uint64_t t = frame_time(start_us_, frame_index_, config_.period_us());
    if (t > now_us) break;

    std::vector<TapEvent> due;
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (it->timestamp_us <= t) {
        due.push_back(*it);
        it = pending_.erase(it);
      } else {
        ++it;
      }
    }
    std::stable_sort(due.begin(), due.end(),
                     [](const TapEvent& a, const TapEvent& b) { return a.timestamp_us < b.timestamp_us; });
    for (const auto& e : due) apply(e);

    ForceFrame frame;
    frame.seq = first_seq_ + static_cast<std::uint32_t>(frame_index_);
    frame.timestamp_us = t;
    frame.forces = held_;
    out.push_back(frame);
    ++frame_index_;
  }
  return out;
}

std::vector<ForceFrame> sample_taps(std::span<const TapEvent> events, const SensorConfig& config,
                                    std::uint64_t start_us, std::uint64_t end_us) {
  TapSampler sampler(config, start_us);
  std::vector<TapEvent> sorted(events.begin(), events.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TapEvent& a, const TapEvent& b) { return a.timestamp_us < b.timestamp_us; });
  for (const auto& e : sorted) sampler.submit(e);
  if (end_us <= start_us) return {};
  return sampler.advance_to(end_us - 1);
}

std::vector<ForceFrame> encode_pattern(const RhythmPattern& pattern, const SensorConfig& config,
                                       std::uint64_t start_us, std::uint32_t first_seq) {
  validate_pattern(pattern);
  config.validate();
  const double period_us = config.period_us();
  const double end_us = pattern.end_ms() * 1000.0;
  const auto active_frames = static_cast<std::uint64_t>(std::ceil(end_us / period_us - 1e-9));

  std::vector<ForceFrame> frames(active_frames + 1);
  for (std::uint64_t k = 0; k < frames.size(); ++k) {
    frames[k].seq = first_seq + static_cast<std::uint32_t>(k);
    frames[k].timestamp_us = frame_time(start_us, k, period_us);
  }
  for (const Onset& o : pattern.onsets) {
    const double begin = o.time_ms * 1000.0;
    const double end = begin + o.duration_ms * 1000.0;
    const auto first = static_cast<std::uint64_t>(std::max(0.0, std::ceil(begin / period_us - 1e-9)));
    const auto ch = static_cast<std::size_t>(o.channel - 1);
    for (std::uint64_t k = first; k < active_frames; ++k) {
      const double t = static_cast<double>(k) * period_us;
      if (t >= end - 1e-6) break;
      frames[k].forces[ch] = o.intensity * kFullScaleN;
    }
  }
  return frames;
}

RhythmPattern frames_to_onsets(std::span<const ForceFrame> frames, const SensorConfig& config) {
  RhythmPattern out;
  if (frames.empty()) return out;
  const double origin = static_cast<double>(frames.front().timestamp_us);
  const double period_ms = config.period_us() / 1000.0;
  const double threshold = std::max(config.activation_threshold_n, 1e-12);

  for (int ch = 0; ch < kChannels; ++ch) {
    std::size_t i = 0;
    while (i < frames.size()) {
      if (frames[i].forces[ch] < threshold) {
        ++i;
        continue;
      }
      const std::size_t begin = i;
      double peak = 0.0;
      while (i < frames.size() && frames[i].forces[ch] >= threshold) {
        peak = std::max(peak, frames[i].forces[ch]);
        ++i;
      }
      Onset o;
      o.time_ms = (static_cast<double>(frames[begin].timestamp_us) - origin) / 1000.0;
      o.channel = ch + 1;
      o.duration_ms = static_cast<double>(i - begin) * period_ms;
      o.intensity = std::min(1.0, peak / kFullScaleN);
      out.onsets.push_back(o);
    }
  }
  std::stable_sort(out.onsets.begin(), out.onsets.end(),
                   [](const Onset& a, const Onset& b) { return a.time_ms < b.time_ms; });
  return out;
}

}  // namespace musinger::recorder
