#include "musinger/wire/loopback.hpp"

#include <algorithm>
#include <cmath>

#include "musinger/core/error.hpp"

namespace musinger::wire {

void LinkFaults::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(loss) || !prob(duplication)) throw Error(Errc::Config, "loss/dup must be in [0, 1]");
  if (!(jitter_ms >= 0.0) || !(base_delay_ms >= 0.0))
    throw Error(Errc::Config, "delays must be non-negative");
  if (reorder_window == 0) throw Error(Errc::Config, "reorder_window must be >= 1");
}

LoopbackLink::LoopbackLink(LinkFaults faults, std::uint64_t seed) : faults_(faults), rng_(seed) {
  faults_.validate();
}

void LoopbackLink::schedule(std::vector<std::uint8_t> bytes, std::uint64_t send_us) {
  std::uniform_real_distribution<double> jitter(0.0, faults_.jitter_ms);
  const double delay_ms = faults_.base_delay_ms + (faults_.jitter_ms > 0.0 ? jitter(rng_) : 0.0);
  const auto arrival = send_us + static_cast<std::uint64_t>(std::llround(delay_ms * 1000.0));
  in_flight_.emplace(std::make_pair(arrival, order_++), std::move(bytes));
}

void LoopbackLink::release_window() {
  if (window_.empty()) return;
  const std::uint64_t last_send = window_.back().first;
  std::shuffle(window_.begin(), window_.end(), rng_);
  for (auto& [send_us, bytes] : window_) schedule(std::move(bytes), std::max(send_us, last_send));
  window_.clear();
}

void LoopbackLink::send(std::span<const std::uint8_t> bytes, std::uint64_t send_us) {
  ++sent_;
  std::bernoulli_distribution lose(faults_.loss);
  std::bernoulli_distribution dup(faults_.duplication);
  if (faults_.loss > 0.0 && lose(rng_)) {
    ++dropped_;
    return;
  }
  int copies = 1;
  if (faults_.duplication > 0.0 && dup(rng_)) {
    ++duplicated_;
    copies = 2;
  }
  for (int i = 0; i < copies; ++i) {
    std::vector<std::uint8_t> copy(bytes.begin(), bytes.end());
    if (faults_.reorder_window > 1) {
      window_.emplace_back(send_us, std::move(copy));
      if (window_.size() >= faults_.reorder_window) release_window();
    } else {
      schedule(std::move(copy), send_us);
    }
  }
}

void LoopbackLink::flush() { release_window(); }

std::vector<LoopbackLink::Delivery> LoopbackLink::receive(std::uint64_t now_us) {
  std::vector<Delivery> out;
  auto it = in_flight_.begin();
  while (it != in_flight_.end() && it->first.first <= now_us) {
    out.push_back({it->first.first, std::move(it->second)});
    it = in_flight_.erase(it);
  }
  return out;
}

}  // namespace musinger::wire
