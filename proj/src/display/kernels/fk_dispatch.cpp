#include <cmath>
#include <vector>

#include "musinger/core/error.hpp"
#include "musinger/display/fk_batch.hpp"

namespace musinger::display {

std::string_view simd_level_name(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::Scalar: return "scalar";
    case SimdLevel::Avx2: return "avx2";
    case SimdLevel::Neon: return "neon";
  }
  return "?";
}

bool simd_level_available(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::Scalar: return true;
    case SimdLevel::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case SimdLevel::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

SimdLevel detect_simd_level() noexcept {
  static const SimdLevel level = [] {
    if (simd_level_available(SimdLevel::Avx2)) return SimdLevel::Avx2;
    if (simd_level_available(SimdLevel::Neon)) return SimdLevel::Neon;
    return SimdLevel::Scalar;
  }();
  return level;
}

FkKernelParams FkKernelParams::from(const LinkageGeometry& geom) noexcept {
  FkKernelParams p;
  p.base_separation = geom.base_separation_mm;
  p.proximal = geom.proximal_length_mm;
  p.distal = geom.distal_length_mm;
  p.branch_sign = geom.branch == Branch::ElbowOut ? 1.0 : -1.0;
  p.cross_tolerance = 1e-10 * geom.proximal_length_mm *
                      (geom.proximal_length_mm + geom.distal_length_mm + geom.base_separation_mm);
  return p;
}

void run_fk_kernel(SimdLevel level, const FkKernelParams& p, const FkKernelArgs& a) noexcept {
  if (!simd_level_available(level)) level = SimdLevel::Scalar;
  switch (level) {
#if defined(__x86_64__) || defined(_M_X64)
    case SimdLevel::Avx2: kernels::fk_avx2(p, a); return;
#endif
#if defined(__aarch64__)
    case SimdLevel::Neon: kernels::fk_neon(p, a); return;
#endif
    default: kernels::fk_scalar(p, a); return;
  }
}

void forward_kinematics_batch(const LinkageGeometry& geom, std::span<const double> theta1_rad,
                              std::span<const double> theta2_rad, std::span<double> x_mm,
                              std::span<double> y_mm, std::span<std::uint8_t> valid, SimdLevel level) {
  const std::size_t n = theta1_rad.size();
  if (theta2_rad.size() != n || x_mm.size() != n || y_mm.size() != n || valid.size() != n)
    throw Error(Errc::InvalidInput, "forward_kinematics_batch: span lengths differ");
  std::vector<double> trig(4 * n);
  double* c1 = trig.data();
  double* s1 = c1 + n;
  double* c2 = s1 + n;
  double* s2 = c2 + n;
  for (std::size_t i = 0; i < n; ++i) {
    c1[i] = std::cos(theta1_rad[i]);
    s1[i] = std::sin(theta1_rad[i]);
    c2[i] = std::cos(theta2_rad[i]);
    s2[i] = std::sin(theta2_rad[i]);
  }
  run_fk_kernel(level, FkKernelParams::from(geom),
                FkKernelArgs{c1, s1, c2, s2, x_mm.data(), y_mm.data(), valid.data(), n});
}

}  // namespace musinger::display
