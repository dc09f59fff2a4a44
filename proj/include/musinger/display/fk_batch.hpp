#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "musinger/display/kinematics.hpp"

namespace musinger::display {

// Batch forward kinematics. The per-pair arithmetic is data parallel, so it
// lives in interchangeable kernels: a scalar reference and SIMD variants
// (AVX2 on x86-64, NEON on AArch64) picked at runtime. All kernels perform
// the same operations in the same order and must agree with the scalar
// reference to the last few ulps.

enum class SimdLevel { Scalar, Avx2, Neon };

std::string_view simd_level_name(SimdLevel level) noexcept;

/// Best level supported by both the build and the running CPU.
SimdLevel detect_simd_level() noexcept;

/// Whether `level` can run here (Scalar always can).
bool simd_level_available(SimdLevel level) noexcept;

struct FkKernelParams {
  double base_separation = 0.0;
  double proximal = 0.0;
  double distal = 0.0;
  double branch_sign = 1.0;  // +1 ElbowOut, -1 ElbowIn
  double cross_tolerance = 0.0;

  static FkKernelParams from(const LinkageGeometry& geom) noexcept;
};

/// Kernel inputs are cos/sin of both motor angles so trig stays out of the
/// vector loop. valid[i] = 1 when the pair is assembled (0 < |P1P2| <= 2*L2)
/// and in the elbows-out working mode.
struct FkKernelArgs {
  const double* cos1;
  const double* sin1;
  const double* cos2;
  const double* sin2;
  double* x;
  double* y;
  std::uint8_t* valid;
  std::size_t n;
};

namespace kernels {
void fk_scalar(const FkKernelParams& p, const FkKernelArgs& a) noexcept;
#if defined(__x86_64__) || defined(_M_X64)
void fk_avx2(const FkKernelParams& p, const FkKernelArgs& a) noexcept;
#endif
#if defined(__aarch64__)
void fk_neon(const FkKernelParams& p, const FkKernelArgs& a) noexcept;
#endif
}  // namespace kernels

/// Runs the kernel for `level` (falls back to scalar when unavailable).
void run_fk_kernel(SimdLevel level, const FkKernelParams& p, const FkKernelArgs& a) noexcept;

/// Angle-space front end. All spans must have equal length.
void forward_kinematics_batch(const LinkageGeometry& geom, std::span<const double> theta1_rad,
                              std::span<const double> theta2_rad, std::span<double> x_mm,
                              std::span<double> y_mm, std::span<std::uint8_t> valid,
                              SimdLevel level = detect_simd_level());

}  // namespace musinger::display
