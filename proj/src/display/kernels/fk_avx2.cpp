// Compiled with -mavx2 (see CMakeLists.txt); only called after a CPUID check.
// Must not pull in inline helpers shared with baseline translation units.
#include <immintrin.h>

#include "musinger/display/fk_batch.hpp"

namespace musinger::display::kernels {

void fk_avx2(const FkKernelParams& p, const FkKernelArgs& a) noexcept {
  const __m256d l1 = _mm256_set1_pd(p.proximal);
  const __m256d l2 = _mm256_set1_pd(p.distal);
  const __m256d d = _mm256_set1_pd(p.base_separation);
  const __m256d sign = _mm256_set1_pd(p.branch_sign);
  const __m256d tol = _mm256_set1_pd(p.cross_tolerance);
  const __m256d ntol = _mm256_set1_pd(-p.cross_tolerance);
  const __m256d half_c = _mm256_set1_pd(0.5);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);

  std::size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    const __m256d c1 = _mm256_loadu_pd(a.cos1 + i);
    const __m256d s1 = _mm256_loadu_pd(a.sin1 + i);
    const __m256d c2 = _mm256_loadu_pd(a.cos2 + i);
    const __m256d s2 = _mm256_loadu_pd(a.sin2 + i);

    const __m256d p1x = _mm256_mul_pd(l1, c1);
    const __m256d p1y = _mm256_mul_pd(l1, s1);
    const __m256d a2x = _mm256_mul_pd(l1, c2);
    const __m256d a2y = _mm256_mul_pd(l1, s2);
    const __m256d p2x = _mm256_add_pd(d, a2x);
    const __m256d p2y = a2y;
    const __m256d dx = _mm256_sub_pd(p2x, p1x);
    const __m256d dy = _mm256_sub_pd(p2y, p1y);
    const __m256d dist2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d dist = _mm256_sqrt_pd(dist2);
    const __m256d half = _mm256_mul_pd(half_c, dist);
    const __m256d hh = _mm256_mul_pd(_mm256_sub_pd(l2, half), _mm256_add_pd(l2, half));

    const __m256d has_dist = _mm256_cmp_pd(dist2, zero, _CMP_GT_OQ);
    const __m256d assembled = _mm256_and_pd(has_dist, _mm256_cmp_pd(hh, zero, _CMP_GE_OQ));
    const __m256d h = _mm256_sqrt_pd(_mm256_blendv_pd(zero, hh, _mm256_cmp_pd(hh, zero, _CMP_GT_OQ)));
    const __m256d safe = _mm256_blendv_pd(one, dist, has_dist);
    const __m256d k = _mm256_div_pd(_mm256_mul_pd(sign, h), safe);

    const __m256d ex = _mm256_add_pd(_mm256_mul_pd(half_c, _mm256_add_pd(p1x, p2x)), _mm256_mul_pd(k, dy));
    const __m256d ey = _mm256_sub_pd(_mm256_mul_pd(half_c, _mm256_add_pd(p1y, p2y)), _mm256_mul_pd(k, dx));

    const __m256d cross1 = _mm256_sub_pd(_mm256_mul_pd(ex, p1y), _mm256_mul_pd(ey, p1x));
    const __m256d cross2 =
        _mm256_sub_pd(_mm256_mul_pd(_mm256_sub_pd(ex, d), a2y), _mm256_mul_pd(ey, a2x));
    const __m256d outward = _mm256_and_pd(_mm256_cmp_pd(cross1, tol, _CMP_LE_OQ),
                                          _mm256_cmp_pd(cross2, ntol, _CMP_GE_OQ));

    _mm256_storeu_pd(a.x + i, ex);
    _mm256_storeu_pd(a.y + i, ey);
    const int mask = _mm256_movemask_pd(_mm256_and_pd(assembled, outward));
    for (int lane = 0; lane < 4; ++lane) a.valid[i + lane] = static_cast<std::uint8_t>((mask >> lane) & 1);
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
