#include "musinger/pipeline/simulate.hpp"

#include <cmath>

#include "musinger/recorder/sensor.hpp"
#include "musinger/wire/codec.hpp"

namespace musinger::pipeline {

double onset_latency_ms(const SystemConfig& config) {
  const display::HapticDisplay probe(config.display);
  return config.jitter.target_latency_ms + (probe.contact_lag_ticks() - 1) * 1000.0 / config.display.tick_rate_hz;
}

display::OnsetExtraction onset_extraction(const SystemConfig& config) {
  return {config.display.tick_rate_hz, config.display.depth_max_mm, onset_latency_ms(config)};
}

PlaybackResult simulate_playback(const RhythmPattern& pattern, const PlaybackOptions& options) {
  const SystemConfig& cfg = options.config;
  cfg.validate();
  const auto frames = recorder::encode_pattern(pattern, cfg.sensor);

  wire::LoopbackLink link(options.faults, options.seed);
  wire::JitterBuffer buffer(cfg.jitter);
  display::HapticDisplay display(cfg.display);
  PlaybackResult result;

  const double tick_us = 1e6 / cfg.display.tick_rate_hz;
  const double dt = cfg.display.tick_s();
  const auto max_ticks = static_cast<std::uint64_t>(
      std::ceil((pattern.end_ms() + 10.0 * cfg.jitter.gap_timeout_ms + 5000.0) * 1000.0 / tick_us));

  std::size_t next = 0;
  for (std::uint64_t tick = 0; tick < max_ticks; ++tick) {
    const auto now = static_cast<std::uint64_t>(std::llround(static_cast<double>(tick) * tick_us));
    while (next < frames.size() && frames[next].timestamp_us <= now) {
      const auto bytes = wire::encode_frame(frames[next], next + 1 == frames.size());
      link.send(bytes, frames[next].timestamp_us);
      ++result.stats.frames_sent;
      ++next;
    }
    if (next == frames.size()) link.flush();
    for (const auto& d : link.receive(now)) {
      ++result.stats.datagrams_received;
      wire::DecodedFrame decoded;
      if (wire::try_decode_frame(d.bytes, decoded) != wire::DecodeStatus::Ok) {
        ++result.stats.malformed;
        continue;
      }
      buffer.push(decoded.frame, d.arrival_us, decoded.end_of_stream);
    }
    const auto playout = buffer.pop(now);
    const auto& state = display.render_tick(playout.forces(), dt);
    result.history.record(tick, state);
    if (options.observer) options.observer(tick, state);
    result.stats.ticks = tick + 1;

    const bool drained = next == frames.size() && link.idle() && buffer.size() == 0 &&
                         (buffer.finished() || playout.kind == wire::PlayoutKind::Silence);
    const bool at_rest = !state[0].in_contact && !state[1].in_contact && !state[2].in_contact;
    if (drained && at_rest) break;
  }
  result.stats.jitter = buffer.stats();
  result.perceived = display::extract_onsets(result.history, onset_extraction(cfg));
  return result;
}

}  // namespace musinger::pipeline
