#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "comanip/adaptive_control.hpp"
#include "comanip/trajectory.hpp"

using namespace comanip;

namespace {

using Rng = std::mt19937_64;

double uni(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec3 rand3(Rng& rng, double s) { return Vec3(uni(rng, -s, s), uni(rng, -s, s), uni(rng, -s, s)); }

// Smooth analytic object motion: q(t) = a + b sin(w t + phase).
struct SineMotion {
  Vec3 a, b, w, ph;
  ObjectState at(double t) const {
    ObjectState s;
    for (int i = 0; i < 3; ++i) {
      const double q = a(i) + b(i) * std::sin(w(i) * t + ph(i));
      const double qd = b(i) * w(i) * std::cos(w(i) * t + ph(i));
      if (i < 2) {
        s.x_p(i) = q;
        s.v_p(i) = qd;
      } else {
        s.theta = q;
        s.omega = qd;
      }
    }
    return s;
  }
};

}  // namespace

TEST(CompositeError, OnTrajectoryIsZero) {
  ObjectState s;
  s.x_p = Vec2(1.0, -2.0);
  s.theta = 0.4;
  s.v_p = Vec2(0.3, 0.1);
  s.omega = -0.2;
  DesiredSample d;
  d.q = s.q();
  d.qd = s.qdot();
  EXPECT_TRUE(composite_error(s, d, 1.5).isZero(0.0));
}

TEST(CompositeError, PositionTerm) {
  ObjectState s;
  s.x_p = Vec2(0.1, 0.0);
  EXPECT_TRUE(composite_error(s, DesiredSample{}, 2.0).isApprox(Vec3(0.2, 0.0, 0.0), 1e-15));
}

TEST(CompositeError, YawWraps) {
  ObjectState s;
  s.theta = 3.1;
  DesiredSample d;
  d.q.z() = -3.1;
  const Vec3 e = composite_error(s, d, 1.0);
  const double expected = 6.2 - 2.0 * std::numbers::pi;
  EXPECT_NEAR(e.z(), expected, 1e-12);
  EXPECT_NEAR(e.z(), -0.083, 1e-3);
}

TEST(ReferenceMotion, OnTrajectoryFollowsDesired) {
  ObjectState s;
  s.v_p = Vec2(0.5, 0.1);
  s.omega = 0.3;
  DesiredSample d;
  d.q = s.q();
  d.qd = s.qdot();
  d.qdd = Vec3(0.2, -0.4, 0.1);
  const ReferenceMotion r = reference_motion(s, d, 2.0);
  EXPECT_TRUE(r.qd_r.isApprox(d.qd, 1e-15));
  EXPECT_TRUE(r.qdd_r.isApprox(d.qdd, 1e-15));
}

TEST(ReferenceMotion, VelocityMinusReferenceIsComposite) {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    ObjectState s;
    s.x_p = rand3(rng, 2.0).head<2>();
    s.theta = uni(rng, -3.0, 3.0);
    s.v_p = rand3(rng, 1.0).head<2>();
    s.omega = uni(rng, -1.0, 1.0);
    DesiredSample d{rand3(rng, 2.0), rand3(rng, 1.0), rand3(rng, 1.0)};
    const double lambda = uni(rng, 0.1, 5.0);
    const ReferenceMotion r = reference_motion(s, d, lambda);
    EXPECT_TRUE((s.qdot() - r.qd_r - composite_error(s, d, lambda)).isZero(1e-14));
  }
}

TEST(ReferenceMotion, ZeroLambdaTracksDesiredVelocity) {
  ObjectState s;
  s.x_p = Vec2(0.7, -0.3);
  s.theta = 0.5;
  DesiredSample d;
  d.qd = Vec3(0.2, 0.1, -0.3);
  EXPECT_TRUE(reference_motion(s, d, 0.0).qd_r.isApprox(d.qd, 1e-15));
}

TEST(ReferenceMotion, FiniteDifferenceOfReferenceVelocity) {
  Rng rng(22);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const SineMotion actual{rand3(rng, 1.0), rand3(rng, 0.5), rand3(rng, 2.0), rand3(rng, 3.0)};
    TrajectorySpec spec;
    spec.kind = TrajectorySpec::Kind::arc;
    spec.center = rand3(rng, 1.0).head<2>();
    spec.radius = uni(rng, 0.5, 3.0);
    spec.start_angle = uni(rng, -3.0, 3.0);
    spec.sweep = uni(rng, -2.0, 2.0);
    spec.profile = {0.0, 10.0, 0.3};
    spec.yaw_mode = TrajectorySpec::YawMode::tangent;
    const DesiredTrajectory traj(spec);
    const double lambda = uni(rng, 0.5, 3.0);
    const double t = uni(rng, 0.5, 9.5);
    const Vec3 plus = reference_motion(actual.at(t + h), traj.sample(t + h), lambda).qd_r;
    const Vec3 minus = reference_motion(actual.at(t - h), traj.sample(t - h), lambda).qd_r;
    const Vec3 fd = (plus - minus) / (2.0 * h);
    EXPECT_LT((fd - reference_motion(actual.at(t), traj.sample(t), lambda).qdd_r).norm(), 1e-4);
  }
}

TEST(Trajectory, SamplesAreFiniteDifferenceConsistent) {
  const double h = 1e-5;
  std::vector<TrajectorySpec> specs(3);
  specs[0].kind = TrajectorySpec::Kind::line;
  specs[0].end = Vec2(3.0, 1.0);
  specs[0].yaw_end = 0.6;
  specs[1].kind = TrajectorySpec::Kind::arc;
  specs[1].radius = 2.0;
  specs[1].sweep = 1.2;
  specs[1].yaw_mode = TrajectorySpec::YawMode::tangent;
  specs[2].kind = TrajectorySpec::Kind::spline;
  specs[2].waypoints = {Vec2(0, 0), Vec2(1, 0.5), Vec2(2, 0.2), Vec2(3, 1.0)};
  specs[2].yaw_mode = TrajectorySpec::YawMode::tangent;
  specs[2].yaw_offset = 0.3;
  for (TrajectorySpec& s : specs) s.profile = {0.0, 10.0, 0.25};
  for (const TrajectorySpec& s : specs) {
    const DesiredTrajectory traj(s);
    for (double t : {0.7, 3.3, 5.0, 8.9}) {
      const DesiredSample a = traj.sample(t - h), b = traj.sample(t + h), c = traj.sample(t);
      Vec3 dq = b.q - a.q;
      dq.z() = wrap_angle(dq.z());
      EXPECT_LT((dq / (2 * h) - c.qd).norm(), 1e-6);
      EXPECT_LT(((b.qd - a.qd) / (2 * h) - c.qdd).norm(), 1e-5);
    }
  }
}

TEST(Trajectory, SeparateYawTiming) {
  TrajectorySpec s;
  s.end = Vec2(2.0, 0.0);
  s.profile = {0.0, 10.0, 0.2};
  s.yaw_end = -0.4;
  s.separate_yaw_profile = true;
  s.yaw_profile = {4.0, 6.0, 0.5};
  const DesiredTrajectory traj(s);
  EXPECT_EQ(traj.sample(3.9).q.z(), 0.0);
  EXPECT_NEAR(traj.sample(5.0).q.z(), -0.2, 1e-12);
  EXPECT_NEAR(traj.sample(6.5).q.z(), -0.4, 1e-12);
  EXPECT_GT(traj.sample(5.0).q.x(), 0.0);
}

TEST(Regressor, ZeroReferenceMotion) {
  EXPECT_TRUE(regressor_theta(0.8, 0.0, Vec3(0.3, 0.1, 0.0), Vec3::Zero().eval()).isZero(0.0));
}

TEST(Regressor, UnitMassColumn) {
  const Mat34 y = regressor_theta(0.0, 0.0, Vec3::Zero().eval(), Vec3(1.0, 0.0, 0.0));
  EXPECT_TRUE(y.col(0).isApprox(Vec3(1.0, 0.0, 0.0), 1e-15));
  EXPECT_TRUE(y.col(3).isZero(0.0));
}

TEST(Regressor, MatchesDynamicsAndIsLinear) {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    ObjectParams p;
    p.m_b = uni(rng, 0.5, 20.0);
    p.I_Gzz = uni(rng, 0.05, 2.0);
    p.r_p = rand3(rng, 0.4).head<2>();
    const double theta = uni(rng, -3.0, 3.0), omega = uni(rng, -3.0, 3.0);
    const Vec3 qd_r = rand3(rng, 2.0), qdd_r = rand3(rng, 2.0);
    const Mat34 y = regressor_theta(theta, omega, qd_r, qdd_r);
    const Vec3 direct = mass_matrix(p, theta) * qdd_r + coriolis_matrix(p, theta, omega) * qd_r;
    EXPECT_LT((y * inertial_parameters(p) - direct).norm(), 1e-10);
    const Vec4 t1 = Vec4::Random(), t2 = Vec4::Random();
    EXPECT_LT((y * (2.0 * t1 - 0.5 * t2) - (2.0 * (y * t1) - 0.5 * (y * t2))).norm(), 1e-12);
  }
}

TEST(Regressor, PsiIsIdentity) {
  const Mat3 y = regressor_psi(ObjectState{});
  EXPECT_TRUE(y.isIdentity(0.0));
  const Vec3 psi(1.0, -2.0, 0.5);
  EXPECT_TRUE((y * psi).isApprox(psi, 0.0));
}

TEST(Regressor, BestConstantPsiIsKineticFriction) {
  // Drive the object at constant velocity by cancelling friction each step,
  // log f_k, and fit a constant wrench by least squares.
  ObjectParams p;
  p.m_b = 5.0;
  p.I_Gzz = 0.3;
  p.mu = 0.3;
  ObjectState s;
  s.v_p = Vec2(0.4, -0.3);
  const int n = 2000;
  Eigen::MatrixXd Y(3 * n, 3);
  Eigen::VectorXd f(3 * n);
  for (int k = 0; k < n; ++k) {
    const Vec3 f_k = -friction_wrench(p, s, Wrench{}).stacked();
    Y.middleRows(3 * k, 3) = regressor_psi(s);
    f.segment(3 * k, 3) = f_k;
    s = step(s, p, Wrench::from(f_k), 1e-3);
  }
  const Vec3 psi = Y.colPivHouseholderQr().solve(f);
  const Vec2 v_hat = Vec2(0.4, -0.3).normalized();
  const Vec3 expected(p.mu * p.m_b * p.g * v_hat.x(), p.mu * p.m_b * p.g * v_hat.y(), 0.0);
  EXPECT_LT((psi - expected).norm(), 1e-9);
}

TEST(ControlWrench, ZeroInputs) {
  const ControlOutput out =
      control_wrench(EstimateState{}, Mat34::Zero(), Mat3::Identity(), Vec3::Zero(), Mat3::Identity());
  EXPECT_TRUE(out.tau.stacked().isZero(0.0));
  EXPECT_FALSE(out.saturated);
}

TEST(ControlWrench, DampingTermOnly) {
  const Mat3 k_d = Vec3(10.0, 10.0, 5.0).asDiagonal();
  const ControlOutput out =
      control_wrench(EstimateState{}, Mat34::Zero(), Mat3::Identity(), Vec3(0.1, 0.0, 0.2), k_d);
  EXPECT_TRUE(out.tau.stacked().isApprox(Vec3(-1.0, 0.0, -1.0), 1e-15));
}

TEST(ControlWrench, PerfectFeedforward) {
  Rng rng(24);
  ObjectParams p;
  p.m_b = 4.0;
  p.I_Gzz = 0.3;
  p.r_p = Vec2(0.1, -0.2);
  const Vec3 psi(1.5, -0.5, 0.2);
  ObjectState s;
  s.theta = 0.6;
  s.omega = 0.8;
  s.v_p = Vec2(0.3, 0.2);
  DesiredSample d{s.q(), s.qdot(), rand3(rng, 1.0)};
  const ReferenceMotion r = reference_motion(s, d, 1.0);
  const Mat34 y = regressor_theta(s.theta, s.omega, r.qd_r, r.qdd_r);
  const EstimateState est{inertial_parameters(p), psi};
  const ControlOutput out = control_wrench(est, y, regressor_psi(s), composite_error(s, d, 1.0), Mat3::Identity());
  const Vec3 direct =
      mass_matrix(p, s.theta) * r.qdd_r + coriolis_matrix(p, s.theta, s.omega) * r.qd_r + psi;
  EXPECT_LT((out.tau.stacked() - direct).norm(), 1e-12);
}

TEST(ControlWrench, Saturates) {
  const WrenchLimits lim{10.0, 2.0};
  const ControlOutput out = control_wrench(EstimateState{}, Mat34::Zero(), Mat3::Identity(), Vec3(-3.0, -4.0, 1.0),
                                           Mat3(Vec3(10.0, 10.0, 5.0).asDiagonal()), lim);
  EXPECT_TRUE(out.saturated);
  EXPECT_NEAR(out.tau.f.norm(), 10.0, 1e-12);
  EXPECT_NEAR(out.tau.m, -2.0, 1e-12);
  EXPECT_TRUE(out.tau.f.normalized().isApprox(Vec2(0.6, 0.8), 1e-12));
}

TEST(AdaptStep, StationaryOnSlidingSurface) {
  EstimateState est{Vec4(1, 2, 3, 4), Vec3(5, 6, 7)};
  const EstimateState next = adapt_step(est, Mat34::Random(), Mat3::Identity(), Vec3::Zero(), AdaptiveGains{}, 0.01);
  EXPECT_EQ(next.theta_hat, est.theta_hat);
  EXPECT_EQ(next.psi_hat, est.psi_hat);
}

TEST(AdaptStep, PsiLawDirect) {
  AdaptiveGains g;
  g.Gamma_psi = Mat3::Identity();
  const EstimateState next =
      adapt_step(EstimateState{}, Mat34::Zero(), Mat3::Identity(), Vec3(1.0, 0.0, 0.0), g, 0.01);
  EXPECT_TRUE(next.psi_hat.isApprox(Vec3(-0.01, 0.0, 0.0), 1e-15));
  EXPECT_TRUE(next.theta_hat.isZero(0.0));
}

TEST(AdaptStep, GainsValidated) {
  AdaptiveGains g;
  g.K_D(0, 0) = -1.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = AdaptiveGains{};
  g.Gamma_theta(0, 1) = 5.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  EXPECT_NO_THROW(AdaptiveGains{}.validate());
}

TEST(Lyapunov, ZeroAtExactEstimates) {
  const Vec4 th(5, 0.2, -0.1, 0.4);
  const Vec3 psi(1, 2, 3);
  EXPECT_EQ(lyapunov_value(Vec3::Zero(), EstimateState{th, psi}, th, psi, Mat3::Identity(), AdaptiveGains{}), 0.0);
}

TEST(Lyapunov, PositiveOtherwise) {
  Rng rng(25);
  ObjectParams p;
  p.r_p = Vec2(0.1, 0.05);
  const Mat3 h = mass_matrix(p, 0.3);
  const Vec4 th = inertial_parameters(p);
  const Vec3 psi(1, 2, 3);
  for (int i = 0; i < 100; ++i) {
    const int which = i % 3;
    Vec3 s = Vec3::Zero();
    EstimateState est{th, psi};
    if (which == 0) s = rand3(rng, 1.0);
    if (which == 1) est.theta_hat += Vec4::Random();
    if (which == 2) est.psi_hat += rand3(rng, 1.0);
    EXPECT_GT(lyapunov_value(s, est, th, psi, h, AdaptiveGains{}), 0.0);
  }
}

TEST(Lyapunov, NonIncreasingAlongClosedLoop) {
  const checks::LyapunovTrace coarse = checks::lyapunov_trace(1e-3);
  EXPECT_LE(coarse.max_increase, 1e-3 * 1e-3);
  const checks::LyapunovTrace fine = checks::lyapunov_trace(5e-4);
  EXPECT_LE(fine.max_increase, 1e-3 * 5e-4);
  EXPECT_LE(fine.max_identity_error, 0.6 * coarse.max_identity_error);
}

TEST(Pd, ZeroErrorZeroWrench) {
  ObjectState s;
  s.x_p = Vec2(1, 1);
  DesiredSample d;
  d.q = s.q();
  EXPECT_TRUE(pd_wrench(s, d, Mat3::Identity(), Mat3::Identity()).tau.stacked().isZero(0.0));
}

TEST(Pd, ProportionalTerm) {
  ObjectState s;
  s.x_p = Vec2(0.1, 0.0);
  const ControlOutput out =
      pd_wrench(s, DesiredSample{}, Mat3(Vec3(50.0, 50.0, 20.0).asDiagonal()), Mat3::Identity());
  EXPECT_TRUE(out.tau.stacked().isApprox(Vec3(-5.0, 0.0, 0.0), 1e-14));
}

TEST(Pd, DerivativeTermAndSaturation) {
  ObjectState s;
  s.v_p = Vec2(0.0, 2.0);
  s.omega = 1.0;
  const ControlOutput out = pd_wrench(s, DesiredSample{}, Mat3::Zero(), Mat3(Vec3(3.0, 3.0, 100.0).asDiagonal()),
                                      WrenchLimits{200.0, 50.0});
  EXPECT_TRUE(out.tau.f.isApprox(Vec2(0.0, -6.0), 1e-14));
  EXPECT_NEAR(out.tau.m, -50.0, 1e-14);
  EXPECT_TRUE(out.saturated);
}
