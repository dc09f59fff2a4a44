#include "musinger/core/clock.hpp"

#include <chrono>

namespace musinger {

std::uint64_t monotonic_now() noexcept {
  using namespace std::chrono;
  return static_cast<std::uint64_t>(
      duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count());
}

}  // namespace musinger
