#pragma once

#include <utility>

#include "comanip/planar_dynamics.hpp"
#include "comanip/types.hpp"

namespace comanip {

using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Adaptive estimates of Theta = [m_b, m_b r_x, m_b r_y, I_pzz] and of the
/// constant disturbance wrench Psi.
struct EstimateState {
  Vec4 theta_hat = Vec4::Zero();
  Vec3 psi_hat = Vec3::Zero();

  bool finite() const { return theta_hat.allFinite() && psi_hat.allFinite(); }
};

struct AdaptiveGains {
  double lambda = 1.0;
  Mat3 K_D = Vec3(40.0, 40.0, 15.0).asDiagonal();
  Mat4 Gamma_theta = Vec4(1.0, 1.0, 1.0, 0.5).asDiagonal();
  Mat3 Gamma_psi = Vec3(2.0, 2.0, 1.0).asDiagonal();

  /// Throws std::invalid_argument unless every gain matrix is symmetric positive definite.
  void validate() const;
};

/// Output limits on the commanded wrench.
struct WrenchLimits {
  double F_max = 200.0;
  double M_max = 60.0;
};

struct ControlOutput {
  Wrench tau;
  bool saturated = false;
};

/// One sample of the desired object trajectory.
struct DesiredSample {
  Vec3 q = Vec3::Zero();
  Vec3 qd = Vec3::Zero();
  Vec3 qdd = Vec3::Zero();
};

/// Tracking error actual - desired with the yaw component wrapped.
Vec3 tracking_error(const ObjectState& state, const DesiredSample& des);

/// s = [xdot_e + lambda x_e; w_e + lambda theta_e].
Vec3 composite_error(const ObjectState& state, const DesiredSample& des, double lambda);

struct ReferenceMotion {
  Vec3 qd_r;
  Vec3 qdd_r;
};

/// qdot_r = qdot - s and its analytic derivative qddot_d - lambda (qdot - qdot_d).
ReferenceMotion reference_motion(const ObjectState& state, const DesiredSample& des, double lambda);

/// Regressor with H(theta) qdd_r + C(theta, omega) qd_r = Y Theta.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 4> regressor_theta(Scalar theta, Scalar omega, const Vec3T<Scalar>& qd_r,
                                            const Vec3T<Scalar>& qdd_r) {
  const Mat2T<Scalar> r = rotation2(theta);
  Mat2T<Scalar> j;
  j << Scalar(0), Scalar(-1), Scalar(1), Scalar(0);
  const Vec2T<Scalar> acc = qdd_r.template head<2>();

  Eigen::Matrix<Scalar, 3, 4> y = Eigen::Matrix<Scalar, 3, 4>::Zero();
  y.template block<2, 1>(0, 0) = acc;
  y.template block<2, 2>(0, 1) = (-qdd_r.z() * j + omega * qd_r.z() * Mat2T<Scalar>::Identity()) * r;
  y.template block<1, 2>(2, 1) = (r.transpose() * j * acc).transpose();
  y(2, 3) = qdd_r.z();
  return y;
}

/// Constant-wrench disturbance model: f_k = Psi.
inline Mat3 regressor_psi(const ObjectState&) { return Mat3::Identity(); }

/// tau = Y_theta theta_hat + Y_psi psi_hat - K_D s, clamped to `limits`.
ControlOutput control_wrench(const EstimateState& est, const Mat34& y_theta, const Mat3& y_psi, const Vec3& s,
                             const Mat3& K_D, const WrenchLimits& limits = {});

/// Euler step of the adaptation laws: estimates move by -dt Gamma Y^T s.
EstimateState adapt_step(const EstimateState& est, const Mat34& y_theta, const Mat3& y_psi, const Vec3& s,
                         const AdaptiveGains& gains, double dt);

/// V = 1/2 (s^T H s + dTheta^T Gamma_theta^-1 dTheta + dPsi^T Gamma_psi^-1 dPsi).
double lyapunov_value(const Vec3& s, const EstimateState& est, const Vec4& theta_true, const Vec3& psi_true,
                      const Mat3& H, const AdaptiveGains& gains);

/// Non-adaptive baseline: tau = -K_P q_e - K_D qdot_e.
ControlOutput pd_wrench(const ObjectState& state, const DesiredSample& des, const Mat3& K_P, const Mat3& K_D,
                        const WrenchLimits& limits = {});

/// Applies the saturation used by both controllers.
ControlOutput saturate(const Vec3& tau, const WrenchLimits& limits);

}  // namespace comanip
