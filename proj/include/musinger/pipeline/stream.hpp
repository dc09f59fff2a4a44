#pragma once

#include <atomic>
#include <cstdint>
#include <span>

#include "musinger/pipeline/simulate.hpp"
#include "musinger/pipeline/udp.hpp"
#include "musinger/recorder/sensor.hpp"

namespace musinger::pipeline {

struct ReceiverOptions {
  SystemConfig config;
  /// Applied to every arriving datagram before the jitter buffer.
  wire::LinkFaults faults;
  std::uint64_t seed = 0;
  StateObserver observer;
  const std::atomic<bool>* stop = nullptr;
  /// Give up when no frame has arrived after this long; 0 waits forever.
  double first_frame_timeout_s = 0.0;
  /// Ends a stream whose end-of-stream frame was lost once it has been
  /// silent and datagram-free for this long.
  double end_silence_s = 2.0;
};

struct ReceiveResult {
  display::StateHistory history;
  RhythmPattern perceived;
  StreamStats stats;
  bool completed = false;  // end of stream reached, not interrupted or timed out
};

/// Real-time listener: a network task feeds the jitter buffer while the
/// calling thread ticks the display at tick_rate_hz. Malformed datagrams are
/// counted and dropped. History ticks start at the first played frame.
ReceiveResult run_receiver(DatagramSource& source, const ReceiverOptions& options);

/// Sends frames at their timestamps, relative to the first one; the last
/// frame carries the end-of-stream flag. Returns the number sent.
std::uint64_t send_paced(std::span<const ForceFrame> frames, DatagramSink& sink,
                         const std::atomic<bool>* stop = nullptr);

/// Live tapping sender: samples taps into frames in real time and sends each
/// frame as soon as it is due.
class LiveSender {
 public:
  LiveSender(recorder::SensorConfig sensor, DatagramSink& sink);

  /// Thread-safe; used for taps arriving from other sources (UI bridge).
  void submit(const recorder::TapEvent& event) { sampler_.submit(event); }

  /// Reads j/k/l keys from input_fd (or nothing when input_fd < 0) until
  /// 'q', end of input or *stop, then sends a final zero frame flagged end
  /// of stream. Returns the number of frames sent.
  std::uint64_t run(int input_fd, double hold_ms, const std::atomic<bool>* stop);

 private:
  void flush(std::uint64_t now_us);

  recorder::TapSampler sampler_;
  DatagramSink& sink_;
  std::uint64_t sent_ = 0;
};

}  // namespace musinger::pipeline
