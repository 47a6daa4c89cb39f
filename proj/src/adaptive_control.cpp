#include "comanip/adaptive_control.hpp"

#include <stdexcept>
#include <string>

namespace comanip {
namespace {

template <typename Derived>
void require_spd(const Eigen::MatrixBase<Derived>& m, const char* name) {
  using Matrix = typename Derived::PlainObject;
  const Matrix sym = 0.5 * (m + m.transpose());
  if ((m - sym).cwiseAbs().maxCoeff() > 1e-12 || Eigen::LLT<Matrix>(sym).info() != Eigen::Success) {
    throw std::invalid_argument(std::string("AdaptiveGains: ") + name + " is not symmetric positive definite");
  }
}

}  // namespace

void AdaptiveGains::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("AdaptiveGains: lambda must be >= 0");
  require_spd(K_D, "K_D");
  require_spd(Gamma_theta, "Gamma_theta");
  require_spd(Gamma_psi, "Gamma_psi");
}

Vec3 tracking_error(const ObjectState& state, const DesiredSample& des) {
  Vec3 e = state.q() - des.q;
  e.z() = wrap_angle(e.z());
  return e;
}

Vec3 composite_error(const ObjectState& state, const DesiredSample& des, double lambda) {
  return (state.qdot() - des.qd) + lambda * tracking_error(state, des);
}

ReferenceMotion reference_motion(const ObjectState& state, const DesiredSample& des, double lambda) {
  const Vec3 s = composite_error(state, des, lambda);
  return {state.qdot() - s, des.qdd - lambda * (state.qdot() - des.qd)};
}

ControlOutput saturate(const Vec3& tau, const WrenchLimits& limits) {
  ControlOutput out;
  out.tau = Wrench::from(tau);
  const double fn = out.tau.f.norm();
  if (fn > limits.F_max) {
    out.tau.f *= limits.F_max / fn;
    out.saturated = true;
  }
  if (std::abs(out.tau.m) > limits.M_max) {
    out.tau.m = std::copysign(limits.M_max, out.tau.m);
    out.saturated = true;
  }
  return out;
}

ControlOutput control_wrench(const EstimateState& est, const Mat34& y_theta, const Mat3& y_psi, const Vec3& s,
                             const Mat3& K_D, const WrenchLimits& limits) {
  return saturate(y_theta * est.theta_hat + y_psi * est.psi_hat - K_D * s, limits);
}

EstimateState adapt_step(const EstimateState& est, const Mat34& y_theta, const Mat3& y_psi, const Vec3& s,
                         const AdaptiveGains& gains, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("adapt_step: dt must be positive");
  EstimateState next;
  next.theta_hat = est.theta_hat - dt * gains.Gamma_theta * y_theta.transpose() * s;
  next.psi_hat = est.psi_hat - dt * gains.Gamma_psi * y_psi.transpose() * s;
  return next;
}

double lyapunov_value(const Vec3& s, const EstimateState& est, const Vec4& theta_true, const Vec3& psi_true,
                      const Mat3& H, const AdaptiveGains& gains) {
  const Vec4 dth = est.theta_hat - theta_true;
  const Vec3 dps = est.psi_hat - psi_true;
  return 0.5 * (s.dot(H * s) + dth.dot(gains.Gamma_theta.llt().solve(dth)) +
                dps.dot(gains.Gamma_psi.llt().solve(dps)));
}

ControlOutput pd_wrench(const ObjectState& state, const DesiredSample& des, const Mat3& K_P, const Mat3& K_D,
                        const WrenchLimits& limits) {
  return saturate(-K_P * tracking_error(state, des) - K_D * (state.qdot() - des.qd), limits);
}

}  // namespace comanip
