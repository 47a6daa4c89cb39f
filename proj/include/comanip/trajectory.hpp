#pragma once

#include <vector>

#include "comanip/adaptive_control.hpp"
#include "comanip/types.hpp"

namespace comanip {

/// Normalized progress along a path with a trapezoidal rate profile.
struct SpeedProfile {
  double t_start = 0.0;
  double t_end = 10.0;
  double accel_fraction = 0.2;  // share of the motion spent accelerating (and again decelerating)

  /// Returns progress sigma in [0, 1] and its first two time derivatives.
  void evaluate(double t, double& sigma, double& sigma_dot, double& sigma_ddot) const;
};

struct TrajectorySpec {
  enum class Kind { line, arc, spline };
  enum class YawMode { fixed, tangent };

  Kind kind = Kind::line;
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  // arc
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  double start_angle = 0.0;
  double sweep = 0.0;
  // spline
  std::vector<Vec2> waypoints;

  SpeedProfile profile;
  YawMode yaw_mode = YawMode::fixed;
  double yaw_start = 0.0;
  double yaw_end = 0.0;
  double yaw_offset = 0.0;  // tangent mode
  // fixed mode: yaw follows its own timing when set, else the path profile
  bool separate_yaw_profile = false;
  SpeedProfile yaw_profile;
};

/// Time-parameterized desired pose q_d(t) with analytic first and second derivatives.
class DesiredTrajectory {
 public:
  explicit DesiredTrajectory(TrajectorySpec spec);

  DesiredSample sample(double t) const;
  const TrajectorySpec& spec() const { return spec_; }

 private:
  // Path point and its first three derivatives with respect to sigma.
  void path(double sigma, Vec2& p, Vec2& dp, Vec2& ddp, Vec2& dddp) const;

  TrajectorySpec spec_;
  std::vector<double> knots_;
  std::vector<Vec2> second_;  // spline second derivatives at knots
};

}  // namespace comanip
