#pragma once

#include <cstdint>

namespace musinger {

/// Microseconds on the process-wide steady clock. Only differences between
/// two readings carry meaning; the epoch is unspecified.
std::uint64_t monotonic_now() noexcept;

/// Time source abstraction so streaming code can run against real time or a
/// simulated clock in tests.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::uint64_t now_us() const = 0;
};

class SteadyClock final : public Clock {
 public:
  std::uint64_t now_us() const override { return monotonic_now(); }
};

/// Manually advanced clock for deterministic simulation.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::uint64_t start_us = 0) : now_(start_us) {}
  std::uint64_t now_us() const override { return now_; }
  void set(std::uint64_t t_us) { now_ = t_us; }
  void advance(std::uint64_t dt_us) { now_ += dt_us; }

 private:
  std::uint64_t now_;
};

}  // namespace musinger
