#include "musinger/wire/jitter_buffer.hpp"

#include <cmath>

#include "musinger/core/error.hpp"

namespace musinger::wire {

void JitterBufferConfig::validate(double frame_rate_hz) const {
  if (!(target_latency_ms >= 0.0)) throw Error(Errc::Config, "target_latency_ms must be >= 0");
  if (!(target_latency_ms < gap_timeout_ms))
    throw Error(Errc::Config, "target_latency_ms must be below gap_timeout_ms");
  const double needed = 2.0 * target_latency_ms / 1000.0 * frame_rate_hz;
  if (static_cast<double>(capacity_frames) < needed || capacity_frames == 0)
    throw Error(Errc::Config, "capacity_frames must be at least 2 * target_latency * rate (" +
                                  std::to_string(static_cast<int>(std::ceil(needed))) + ")");
}

JitterBuffer::JitterBuffer(JitterBufferConfig config) : config_(config) {}

std::uint64_t JitterBuffer::playout_time(const ForceFrame& f) const {
  const auto latency_us = static_cast<std::int64_t>(std::llround(config_.target_latency_ms * 1000.0));
  const std::int64_t t = static_cast<std::int64_t>(f.timestamp_us) + *offset_us_ + latency_us;
  return t < 0 ? 0 : static_cast<std::uint64_t>(t);
}

bool JitterBuffer::push(const ForceFrame& frame, std::uint64_t arrival_us, bool end_of_stream) {
  std::lock_guard lock(mutex_);
  if (last_played_seq_ && frame.seq <= *last_played_seq_) {
    ++stats_.late;
    return false;
  }
  if (pending_.contains(frame.seq)) {
    ++stats_.duplicates;
    return false;
  }
  if (!offset_us_)
    offset_us_ = static_cast<std::int64_t>(arrival_us) - static_cast<std::int64_t>(frame.timestamp_us);
  if (playout_time(frame) < arrival_us) {
    ++stats_.late;
    return false;
  }
  if (pending_.size() >= config_.capacity_frames) {
    ++stats_.overflow;
    return false;
  }
  pending_.emplace(frame.seq, frame);
  if (end_of_stream) end_seq_ = frame.seq;
  ++stats_.accepted;
  return true;
}

Playout JitterBuffer::pop(std::uint64_t now_us) {
  std::lock_guard lock(mutex_);
  Playout out;
  if (!offset_us_) {
    out.kind = PlayoutKind::Stalled;
    return out;
  }
  if (finished_) {
    out.kind = PlayoutKind::Silence;
    ++stats_.silence;
    return out;
  }
  if (!pending_.empty()) {
    auto it = pending_.begin();
    const std::uint64_t due = playout_time(it->second);
    if (due <= now_us) {
      if (last_played_seq_) stats_.skipped += it->first - *last_played_seq_ - 1;
      last_played_seq_ = it->first;
      last_frame_ = it->second;
      last_playout_us_ = due;
      if (end_seq_ && *end_seq_ == it->first) finished_ = true;
      pending_.erase(it);
      ++stats_.played;
      out.kind = PlayoutKind::Frame;
      out.frame = last_frame_;
      return out;
    }
  }
  const auto timeout_us = static_cast<std::uint64_t>(std::llround(config_.gap_timeout_ms * 1000.0));
  if (last_played_seq_ && now_us - last_playout_us_ < timeout_us) {
    ++stats_.held;
    out.kind = PlayoutKind::Held;
    out.frame = last_frame_;
    return out;
  }
  ++stats_.silence;
  out.kind = PlayoutKind::Silence;
  return out;
}

bool JitterBuffer::finished() const {
  std::lock_guard lock(mutex_);
  return finished_;
}

JitterStats JitterBuffer::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

std::size_t JitterBuffer::size() const {
  std::lock_guard lock(mutex_);
  return pending_.size();
}

}  // namespace musinger::wire
