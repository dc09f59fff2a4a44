#include <arm_neon.h>

#include "fk_lane.hpp"

namespace musinger::display::kernels {

void fk_neon(const FkKernelParams& p, const FkKernelArgs& a) noexcept {
  const float64x2_t l1 = vdupq_n_f64(p.proximal);
  const float64x2_t l2 = vdupq_n_f64(p.distal);
  const float64x2_t d = vdupq_n_f64(p.base_separation);
  const float64x2_t sign = vdupq_n_f64(p.branch_sign);
  const float64x2_t tol = vdupq_n_f64(p.cross_tolerance);
  const float64x2_t ntol = vdupq_n_f64(-p.cross_tolerance);
  const float64x2_t half_c = vdupq_n_f64(0.5);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);

  std::size_t i = 0;
  for (; i + 2 <= a.n; i += 2) {
    const float64x2_t c1 = vld1q_f64(a.cos1 + i);
    const float64x2_t s1 = vld1q_f64(a.sin1 + i);
    const float64x2_t c2 = vld1q_f64(a.cos2 + i);
    const float64x2_t s2 = vld1q_f64(a.sin2 + i);

    const float64x2_t p1x = vmulq_f64(l1, c1);
    const float64x2_t p1y = vmulq_f64(l1, s1);
    const float64x2_t a2x = vmulq_f64(l1, c2);
    const float64x2_t a2y = vmulq_f64(l1, s2);
    const float64x2_t p2x = vaddq_f64(d, a2x);
    const float64x2_t p2y = a2y;
    const float64x2_t dx = vsubq_f64(p2x, p1x);
    const float64x2_t dy = vsubq_f64(p2y, p1y);
    // Separate mul + add (no vfma) to match the scalar reference rounding.
    const float64x2_t dist2 = vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy));
    const float64x2_t dist = vsqrtq_f64(dist2);
    const float64x2_t half = vmulq_f64(half_c, dist);
    const float64x2_t hh = vmulq_f64(vsubq_f64(l2, half), vaddq_f64(l2, half));

    const uint64x2_t has_dist = vcgtq_f64(dist2, zero);
    const uint64x2_t assembled = vandq_u64(has_dist, vcgeq_f64(hh, zero));
    const float64x2_t h = vsqrtq_f64(vbslq_f64(vcgtq_f64(hh, zero), hh, zero));
    const float64x2_t safe = vbslq_f64(has_dist, dist, one);
    const float64x2_t k = vdivq_f64(vmulq_f64(sign, h), safe);

    const float64x2_t ex = vaddq_f64(vmulq_f64(half_c, vaddq_f64(p1x, p2x)), vmulq_f64(k, dy));
    const float64x2_t ey = vsubq_f64(vmulq_f64(half_c, vaddq_f64(p1y, p2y)), vmulq_f64(k, dx));
    const float64x2_t cross1 = vsubq_f64(vmulq_f64(ex, p1y), vmulq_f64(ey, p1x));
    const float64x2_t cross2 = vsubq_f64(vmulq_f64(vsubq_f64(ex, d), a2y), vmulq_f64(ey, a2x));
    const uint64x2_t outward = vandq_u64(vcleq_f64(cross1, tol), vcgeq_f64(cross2, ntol));
    const uint64x2_t ok = vandq_u64(assembled, outward);

    vst1q_f64(a.x + i, ex);
    vst1q_f64(a.y + i, ey);
    a.valid[i] = static_cast<std::uint8_t>(vgetq_lane_u64(ok, 0) != 0);
    a.valid[i + 1] = static_cast<std::uint8_t>(vgetq_lane_u64(ok, 1) != 0);
  }

  FkKernelArgs tail = a;
  tail.cos1 += i;
  tail.sin1 += i;
  tail.cos2 += i;
  tail.sin2 += i;
  tail.x += i;
  tail.y += i;
  tail.valid += i;
  tail.n = a.n - i;
  fk_scalar(p, tail);
}

}  // namespace musinger::display::kernels
