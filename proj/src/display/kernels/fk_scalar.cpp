#include "fk_lane.hpp"

namespace musinger::display::kernels {

void fk_scalar(const FkKernelParams& p, const FkKernelArgs& a) noexcept {
  for (std::size_t i = 0; i < a.n; ++i) {
    const auto lane = detail::fk_lane(p, a.cos1[i], a.sin1[i], a.cos2[i], a.sin2[i]);
    a.x[i] = lane.x;
    a.y[i] = lane.y;
    a.valid[i] = static_cast<std::uint8_t>(lane.assembled && lane.outward);
  }
}

}  // namespace musinger::display::kernels
