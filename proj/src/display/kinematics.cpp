#include "musinger/display/kinematics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "kernels/fk_lane.hpp"
#include "musinger/display/fk_batch.hpp"

namespace musinger::display {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLimitSlackRad = 1e-12;

double wrap_angle(double a) noexcept {
  // Into (-pi, pi].
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Angle at the motor between the base->target line and the proximal link,
/// from the law of cosines in its factored (cancellation-free) form.
std::optional<double> elbow_offset(double l1, double l2, double r) noexcept {
  const double f1 = l1 + r - l2;
  const double f2 = l1 + r + l2;
  const double f3 = l2 - l1 + r;
  const double f4 = l2 + l1 - r;
  const double slack = 1e-12 * (l1 + l2);
  if (f1 < -slack || f3 < -slack || f4 < -slack) return std::nullopt;
  const double prod = std::max(f1, 0.0) * f2 * std::max(f3, 0.0) * std::max(f4, 0.0);
  return std::atan2(std::sqrt(prod), l1 * l1 + r * r - l2 * l2);
}

std::optional<double> clamp_to_limits(const LinkageGeometry& g, double theta) noexcept {
  if (theta < g.angle_min_rad - kLimitSlackRad || theta > g.angle_max_rad + kLimitSlackRad)
    return std::nullopt;
  return std::clamp(theta, g.angle_min_rad, g.angle_max_rad);
}

}  // namespace

double distance(Point2 a, Point2 b) noexcept { return std::hypot(a.x_mm - b.x_mm, a.y_mm - b.y_mm); }

void LinkageGeometry::validate() const {
  if (!(base_separation_mm > 0.0 && proximal_length_mm > 0.0 && distal_length_mm > 0.0))
    throw Error(Errc::Config, "linkage lengths must be positive");
  if (!(2.0 * distal_length_mm > base_separation_mm))
    throw Error(Errc::Config, "2 * distal_length_mm must exceed base_separation_mm");
  if (!(angle_min_rad < angle_max_rad)) throw Error(Errc::Config, "angle_min_rad must be < angle_max_rad");
}

std::optional<Point2> try_forward_kinematics(const LinkageGeometry& geom, double theta1_rad,
                                             double theta2_rad) noexcept {
  const auto lane = detail::fk_lane(FkKernelParams::from(geom), std::cos(theta1_rad), std::sin(theta1_rad),
                                    std::cos(theta2_rad), std::sin(theta2_rad));
  if (!lane.assembled) return std::nullopt;
  return Point2{lane.x, lane.y};
}

Point2 forward_kinematics(const LinkageGeometry& geom, double theta1_rad, double theta2_rad) {
  if (auto p = try_forward_kinematics(geom, theta1_rad, theta2_rad)) return *p;
  std::ostringstream msg;
  msg << "singular configuration at theta = (" << rad_to_deg(theta1_rad) << ", " << rad_to_deg(theta2_rad)
      << ") deg";
  throw Error(Errc::Unreachable, msg.str());
}

bool elbows_outward(const LinkageGeometry& geom, double theta1_rad, double theta2_rad,
                    Point2 effector) noexcept {
  const auto p = FkKernelParams::from(geom);
  const double l1 = geom.proximal_length_mm;
  const double cross1 = effector.x_mm * (l1 * std::sin(theta1_rad)) - effector.y_mm * (l1 * std::cos(theta1_rad));
  const double cross2 = (effector.x_mm - geom.base_separation_mm) * (l1 * std::sin(theta2_rad)) -
                        effector.y_mm * (l1 * std::cos(theta2_rad));
  return cross1 <= p.cross_tolerance && cross2 >= -p.cross_tolerance;
}

std::optional<JointAngles> solve_inverse_kinematics(const LinkageGeometry& geom, Point2 target) noexcept {
  if (!std::isfinite(target.x_mm) || !std::isfinite(target.y_mm)) return std::nullopt;
  const double l1 = geom.proximal_length_mm;
  const double l2 = geom.distal_length_mm;
  const double d = geom.base_separation_mm;

  const double r1 = std::hypot(target.x_mm, target.y_mm);
  const double r2 = std::hypot(target.x_mm - d, target.y_mm);
  if (r1 < 1e-12 || r2 < 1e-12) return std::nullopt;
  const auto alpha1 = elbow_offset(l1, l2, r1);
  const auto alpha2 = elbow_offset(l1, l2, r2);
  if (!alpha1 || !alpha2) return std::nullopt;

  const double phi1 = std::atan2(target.y_mm, target.x_mm);
  const double phi2 = std::atan2(target.y_mm, target.x_mm - d);
  const auto t1 = clamp_to_limits(geom, wrap_angle(phi1 - *alpha1));
  const auto t2 = clamp_to_limits(geom, wrap_angle(phi2 + *alpha2));
  if (!t1 || !t2) return std::nullopt;

  // The elbows-out pair may still assemble on the other branch.
  const auto fk = try_forward_kinematics(geom, *t1, *t2);
  if (!fk) return std::nullopt;
  const double tol = 1e-6 * std::max(1.0, std::hypot(target.x_mm, target.y_mm));
  if (distance(*fk, target) > tol) return std::nullopt;
  return JointAngles{*t1, *t2};
}

JointAngles inverse_kinematics(const LinkageGeometry& geom, Point2 target) {
  if (auto sol = solve_inverse_kinematics(geom, target)) return *sol;
  const Point2 near = nearest_reachable(geom, target);
  std::ostringstream msg;
  msg << "target (" << target.x_mm << ", " << target.y_mm << ") mm is unreachable; nearest reachable ("
      << near.x_mm << ", " << near.y_mm << ")";
  throw UnreachableError(msg.str(), near);
}

bool workspace_contains(const LinkageGeometry& geom, Point2 point) noexcept {
  return solve_inverse_kinematics(geom, point).has_value();
}

Point2 nearest_reachable(const LinkageGeometry& geom, Point2 target) {
  if (solve_inverse_kinematics(geom, target)) return target;

  // Coarse pass: every pair on a ~1 degree grid over the joint box.
  const double span = geom.angle_max_rad - geom.angle_min_rad;
  const auto steps = static_cast<std::size_t>(std::ceil(span / deg_to_rad(1.0)));
  const std::size_t m = steps + 1;
  const double step = span / static_cast<double>(steps);
  std::vector<double> cs(m), sn(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = geom.angle_min_rad + step * static_cast<double>(i);
    cs[i] = std::cos(a);
    sn[i] = std::sin(a);
  }
  const std::size_t n = m * m;
  std::vector<double> c1(n), s1(n), c2(n), s2(n), xs(n), ys(n);
  std::vector<std::uint8_t> ok(n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t k = i * m + j;
      c1[k] = cs[i];
      s1[k] = sn[i];
      c2[k] = cs[j];
      s2[k] = sn[j];
    }
  run_fk_kernel(detect_simd_level(), FkKernelParams::from(geom),
                FkKernelArgs{c1.data(), s1.data(), c2.data(), s2.data(), xs.data(), ys.data(), ok.data(), n});

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (!ok[k]) continue;
    const double dist = std::hypot(xs[k] - target.x_mm, ys[k] - target.y_mm);
    if (dist < best) {
      best = dist;
      best_k = k;
    }
  }
  if (best_k == n) throw Error(Errc::Config, "linkage workspace is empty under the angle limits");

  // Fine pass: pattern search in joint space, shrinking the step.
  double t1 = geom.angle_min_rad + step * static_cast<double>(best_k / m);
  double t2 = geom.angle_min_rad + step * static_cast<double>(best_k % m);
  auto evaluate = [&](double a, double b) -> std::optional<std::pair<double, Point2>> {
    if (a < geom.angle_min_rad || a > geom.angle_max_rad || b < geom.angle_min_rad || b > geom.angle_max_rad)
      return std::nullopt;
    auto p = try_forward_kinematics(geom, a, b);
    if (!p || !elbows_outward(geom, a, b, *p)) return std::nullopt;
    return std::make_pair(distance(*p, target), *p);
  };
  auto current = evaluate(t1, t2);
  Point2 best_point{xs[best_k], ys[best_k]};
  if (current) best_point = current->second;
  static constexpr std::array<std::pair<int, int>, 8> kMoves = {
      {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  for (double h = step; h > 1e-13; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [di, dj] : kMoves) {
        const double a = std::clamp(t1 + di * h, geom.angle_min_rad, geom.angle_max_rad);
        const double b = std::clamp(t2 + dj * h, geom.angle_min_rad, geom.angle_max_rad);
        auto cand = evaluate(a, b);
        if (cand && cand->first < best) {
          best = cand->first;
          best_point = cand->second;
          t1 = a;
          t2 = b;
          moved = true;
        }
      }
    }
  }
  return best_point;
}

}  // namespace musinger::display
