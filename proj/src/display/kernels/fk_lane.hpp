#pragma once

#include <cmath>
#include <cstdint>

#include "musinger/display/fk_batch.hpp"

namespace musinger::display::detail {

struct FkLane {
  double x;
  double y;
  bool assembled;
  bool outward;
};

// Scalar lane shared by the reference kernel and the single-point API. The
// SIMD kernels mirror this operation sequence exactly.
inline FkLane fk_lane(const FkKernelParams& p, double c1, double s1, double c2, double s2) noexcept {
  const double p1x = p.proximal * c1;
  const double p1y = p.proximal * s1;
  const double a2x = p.proximal * c2;
  const double a2y = p.proximal * s2;
  const double p2x = p.base_separation + a2x;
  const double p2y = a2y;
  const double dx = p2x - p1x;
  const double dy = p2y - p1y;
  const double dist2 = dx * dx + dy * dy;
  const double dist = std::sqrt(dist2);
  const double half = 0.5 * dist;
  const double hh = (p.distal - half) * (p.distal + half);
  const bool assembled = dist2 > 0.0 && hh >= 0.0;
  const double h = std::sqrt(hh > 0.0 ? hh : 0.0);
  const double safe = dist2 > 0.0 ? dist : 1.0;
  const double k = p.branch_sign * h / safe;
  const double ex = 0.5 * (p1x + p2x) + k * dy;
  const double ey = 0.5 * (p1y + p2y) - k * dx;
  const double cross1 = ex * p1y - ey * p1x;
  const double cross2 = (ex - p.base_separation) * a2y - ey * a2x;
  const bool outward = cross1 <= p.cross_tolerance && cross2 >= -p.cross_tolerance;
  return {ex, ey, assembled, outward};
}

}  // namespace musinger::display::detail
