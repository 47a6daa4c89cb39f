#include "comanip/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

namespace comanip {

void SpeedProfile::evaluate(double t, double& sigma, double& sigma_dot, double& sigma_ddot) const {
  const double T = t_end - t_start;
  sigma_dot = sigma_ddot = 0.0;
  if (t <= t_start || T <= 0.0) {
    sigma = (T <= 0.0 && t > t_start) ? 1.0 : 0.0;
    return;
  }
  if (t >= t_end) {
    sigma = 1.0;
    return;
  }
  const double ta = std::clamp(accel_fraction, 1e-6, 0.5) * T;
  const double vmax = 1.0 / (T - ta);
  const double a = vmax / ta;
  const double tau = t - t_start;
  if (tau < ta) {
    sigma = 0.5 * a * tau * tau;
    sigma_dot = a * tau;
    sigma_ddot = a;
  } else if (tau <= T - ta) {
    sigma = 0.5 * a * ta * ta + vmax * (tau - ta);
    sigma_dot = vmax;
  } else {
    const double r = T - tau;
    sigma = 1.0 - 0.5 * a * r * r;
    sigma_dot = a * r;
    sigma_ddot = -a;
  }
}

DesiredTrajectory::DesiredTrajectory(TrajectorySpec spec) : spec_(std::move(spec)) {
  if (spec_.kind != TrajectorySpec::Kind::spline) return;
  const auto& w = spec_.waypoints;
  const std::size_t n = w.size();
  if (n < 2) throw std::invalid_argument("DesiredTrajectory: spline needs at least two waypoints");
  // Chord-length knots normalized to [0, 1].
  knots_.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) knots_[i] = knots_[i - 1] + (w[i] - w[i - 1]).norm();
  if (knots_.back() <= 0.0) throw std::invalid_argument("DesiredTrajectory: degenerate waypoints");
  for (double& k : knots_) k /= knots_.back();

  // Natural cubic spline: tridiagonal solve for second derivatives.
  second_.assign(n, Vec2::Zero());
  if (n < 3) return;
  std::vector<double> diag(n, 0.0), upper(n, 0.0);
  std::vector<Vec2> rhs(n, Vec2::Zero());
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots_[i] - knots_[i - 1], h1 = knots_[i + 1] - knots_[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((w[i + 1] - w[i]) / h1 - (w[i] - w[i - 1]) / h0);
  }
  // Thomas algorithm on the interior rows (natural ends have zero curvature).
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double h0 = knots_[i] - knots_[i - 1];
    const double factor = h0 / diag[i - 1];
    diag[i] -= factor * upper[i - 1];
    rhs[i] -= factor * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    second_[i] = (rhs[i] - upper[i] * second_[i + 1]) / diag[i];
    if (i == 1) break;
  }
}

void DesiredTrajectory::path(double sigma, Vec2& p, Vec2& dp, Vec2& ddp, Vec2& dddp) const {
  switch (spec_.kind) {
    case TrajectorySpec::Kind::line:
      p = spec_.start + sigma * (spec_.end - spec_.start);
      dp = spec_.end - spec_.start;
      ddp.setZero();
      dddp.setZero();
      return;
    case TrajectorySpec::Kind::arc: {
      const double phi = spec_.start_angle + sigma * spec_.sweep;
      const Vec2 radial(std::cos(phi), std::sin(phi));
      const double k = spec_.sweep;
      p = spec_.center + spec_.radius * radial;
      dp = spec_.radius * k * perp(radial);
      ddp = -spec_.radius * k * k * radial;
      dddp = -spec_.radius * k * k * k * perp(radial);
      return;
    }
    case TrajectorySpec::Kind::spline: {
      const auto& w = spec_.waypoints;
      const auto it = std::upper_bound(knots_.begin(), knots_.end(), sigma);
      std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
      i = std::min(i, knots_.size() - 2);
      const double h = knots_[i + 1] - knots_[i];
      const double a = (knots_[i + 1] - sigma) / h, b = (sigma - knots_[i]) / h;
      const Vec2& m0 = second_[i];
      const Vec2& m1 = second_[i + 1];
      p = a * w[i] + b * w[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * (h * h / 6.0);
      dp = (w[i + 1] - w[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * (h / 6.0);
      ddp = a * m0 + b * m1;
      dddp = (m1 - m0) / h;
      return;
    }
  }
}

DesiredSample DesiredTrajectory::sample(double t) const {
  double s, sd, sdd;
  spec_.profile.evaluate(t, s, sd, sdd);
  Vec2 p, dp, ddp, dddp;
  path(s, p, dp, ddp, dddp);

  DesiredSample out;
  out.q.head<2>() = p;
  out.qd.head<2>() = dp * sd;
  out.qdd.head<2>() = ddp * sd * sd + dp * sdd;

  if (spec_.yaw_mode == TrajectorySpec::YawMode::fixed) {
    double ys = s, ysd = sd, ysdd = sdd;
    if (spec_.separate_yaw_profile) spec_.yaw_profile.evaluate(t, ys, ysd, ysdd);
    const double dyaw = spec_.yaw_end - spec_.yaw_start;
    out.q.z() = wrap_angle(spec_.yaw_start + ys * dyaw);
    out.qd.z() = dyaw * ysd;
    out.qdd.z() = dyaw * ysdd;
  } else {
    const double speed2 = std::max(dp.squaredNorm(), 1e-12);
    const double cr = cross2(dp, ddp);
    const double kappa = cr / speed2;
    const double dkappa = (cross2(dp, dddp) * speed2 - cr * 2.0 * dp.dot(ddp)) / (speed2 * speed2);
    out.q.z() = wrap_angle(std::atan2(dp.y(), dp.x()) + spec_.yaw_offset);
    out.qd.z() = kappa * sd;
    out.qdd.z() = kappa * sdd + dkappa * sd * sd;
  }
  return out;
}

}  // namespace comanip
