#pragma once

#include <numbers>
#include <optional>

#include "musinger/core/error.hpp"

namespace musinger::display {

struct Point2 {
  double x_mm = 0.0;
  double y_mm = 0.0;
  bool operator==(const Point2&) const = default;
};

double distance(Point2 a, Point2 b) noexcept;

/// Assembly mode of the distal dyad. ElbowOut puts the effector on the right
/// of the directed line P1 -> P2, which is the lower of the two circle
/// intersections whenever P1 lies left of P2.
enum class Branch { ElbowOut, ElbowIn };

inline constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// One inverted five-bar linkage. Motors sit at (0, 0) and (d, 0); angles are
/// measured from +x, and the skin side is y < 0.
struct LinkageGeometry {
  double base_separation_mm = 30.0;
  double proximal_length_mm = 25.0;
  double distal_length_mm = 40.0;
  double angle_min_rad = deg_to_rad(-170.0);
  double angle_max_rad = deg_to_rad(-10.0);
  Branch branch = Branch::ElbowOut;

  /// Throws Error(Errc::Config) on non-positive lengths, 2*L2 <= d or an
  /// empty angle range.
  void validate() const;
  bool within_limits(double theta_rad) const noexcept {
    return theta_rad >= angle_min_rad && theta_rad <= angle_max_rad;
  }
};

struct JointAngles {
  double theta1_rad = 0.0;
  double theta2_rad = 0.0;
};

/// Raised by inverse_kinematics; carries the closest reachable effector position.
class UnreachableError : public Error {
 public:
  UnreachableError(const std::string& what, Point2 nearest)
      : Error(Errc::Unreachable, what), nearest_(nearest) {}
  Point2 nearest() const noexcept { return nearest_; }

 private:
  Point2 nearest_;
};

/// Circle-intersection forward kinematics. Returns nullopt when the passive
/// joints coincide or are more than 2*L2 apart.
std::optional<Point2> try_forward_kinematics(const LinkageGeometry& geom, double theta1_rad,
                                             double theta2_rad) noexcept;

/// Throwing form; Errc::Unreachable for singular configurations.
Point2 forward_kinematics(const LinkageGeometry& geom, double theta1_rad, double theta2_rad);

/// True when both proximal links point away from the mechanism's centre
/// ("elbows out") for the given effector position, the only working mode the
/// solver returns.
bool elbows_outward(const LinkageGeometry& geom, double theta1_rad, double theta2_rad,
                    Point2 effector) noexcept;

/// Closed-form IK restricted to the elbows-out working mode, angle limits and
/// the configured assembly branch. nullopt when no such solution exists.
std::optional<JointAngles> solve_inverse_kinematics(const LinkageGeometry& geom, Point2 target) noexcept;

/// Throwing form; UnreachableError reports nearest_reachable(geom, target).
JointAngles inverse_kinematics(const LinkageGeometry& geom, Point2 target);

bool workspace_contains(const LinkageGeometry& geom, Point2 point) noexcept;

/// Closest point of the branch-consistent workspace (angle-grid search on the
/// batch FK kernel, then local refinement in joint space).
Point2 nearest_reachable(const LinkageGeometry& geom, Point2 target);

}  // namespace musinger::display
