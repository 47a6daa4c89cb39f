#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace comanip {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat2T = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Eigen::Vector4d;
using Mat2 = Mat2T<double>;
using Mat3 = Mat3T<double>;
using Mat4 = Eigen::Matrix4d;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  using std::fmod;
  const Scalar two_pi = Scalar(2.0 * std::numbers::pi);
  Scalar r = fmod(a + Scalar(std::numbers::pi), two_pi);
  if (r <= Scalar(0)) r += two_pi;
  return r - Scalar(std::numbers::pi);
}

/// Planar cross product a x b (z component).
template <typename DerivedA, typename DerivedB>
auto cross2(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Rotates a planar vector by +90 degrees (z x v).
template <typename Derived>
Vec2T<typename Derived::Scalar> perp(const Eigen::MatrixBase<Derived>& v) {
  return {-v.y(), v.x()};
}

template <typename Scalar>
Mat2T<Scalar> rotation2(Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(theta), s = sin(theta);
  Mat2T<Scalar> r;
  r << c, -s, s, c;
  return r;
}

/// Planar wrench: world-frame force and moment about the reference point.
template <typename Scalar>
struct WrenchT {
  Vec2T<Scalar> f = Vec2T<Scalar>::Zero();
  Scalar m = Scalar(0);

  Vec3T<Scalar> stacked() const { return {f.x(), f.y(), m}; }
  static WrenchT from(const Vec3T<Scalar>& v) { return {v.template head<2>(), v.z()}; }

  WrenchT& operator+=(const WrenchT& o) {
    f += o.f;
    m += o.m;
    return *this;
  }
};
using Wrench = WrenchT<double>;

/// Pose and twist of the manipulated object, measured at the reference point p.
template <typename Scalar>
struct ObjectStateT {
  Vec2T<Scalar> x_p = Vec2T<Scalar>::Zero();
  Scalar theta = Scalar(0);
  Vec2T<Scalar> v_p = Vec2T<Scalar>::Zero();
  Scalar omega = Scalar(0);

  Vec3T<Scalar> q() const { return {x_p.x(), x_p.y(), theta}; }
  Vec3T<Scalar> qdot() const { return {v_p.x(), v_p.y(), omega}; }
  bool finite() const { return x_p.allFinite() && v_p.allFinite() && std::isfinite(theta) && std::isfinite(omega); }
};
using ObjectState = ObjectStateT<double>;

/// Ground-truth object parameters. Only the simulator reads these.
template <typename Scalar>
struct ObjectParamsT {
  Scalar m_b = Scalar(5);
  Scalar I_Gzz = Scalar(0.4);
  Vec2T<Scalar> r_p = Vec2T<Scalar>::Zero();
  Vec2T<Scalar> half_extents{Scalar(0.3), Scalar(0.3)};
  Scalar mu = Scalar(0.3);
  Scalar rho_eff = Scalar(0.1);
  Scalar g = Scalar(9.81);

  /// Yaw inertia about p (parallel axis).
  Scalar I_pzz() const { return I_Gzz + m_b * r_p.squaredNorm(); }

  bool valid() const {
    return m_b > Scalar(0) && I_Gzz > Scalar(0) && mu >= Scalar(0) && rho_eff >= Scalar(0) && I_pzz() > Scalar(0);
  }
};
using ObjectParams = ObjectParamsT<double>;

/// Minimal linear parameterization of the object inertia: [m_b, m_b r_x, m_b r_y, I_pzz].
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> inertial_parameters(const ObjectParamsT<Scalar>& p) {
  Eigen::Matrix<Scalar, 4, 1> th;
  th << p.m_b, p.m_b * p.r_p.x(), p.m_b * p.r_p.y(), p.I_pzz();
  return th;
}

/// Contact geometry of one agent on an object face, body frame.
struct ContactSpec {
  Vec2 r_0 = Vec2::Zero();
  Vec2 n_hat{1.0, 0.0};  // inward normal
  Vec2 t_hat{0.0, -1.0};
  double d_min = -0.2;
  double d_max = 0.2;
  double standoff = 0.05;  // agent COM to face along -n_hat
  bool active = true;

  bool valid(double tol = 1e-9) const {
    return std::abs(n_hat.norm() - 1.0) < tol && std::abs(t_hat.norm() - 1.0) < tol &&
           std::abs(n_hat.dot(t_hat)) < tol && d_min <= 0.0 && 0.0 <= d_max;
  }

  /// Body-frame lever arm of the contact point at slide d.
  Vec2 lever(double d) const { return r_0 + d * t_hat; }
};

/// Planar agent rigid-body state.
struct AgentState {
  Vec2 p = Vec2::Zero();
  double yaw = 0.0;
  Vec2 v = Vec2::Zero();
  double yaw_rate = 0.0;

  Eigen::Matrix<double, 6, 1> vector() const {
    Eigen::Matrix<double, 6, 1> x;
    x << p, yaw, v, yaw_rate;
    return x;
  }
  static AgentState from(const Eigen::Matrix<double, 6, 1>& x) {
    return {x.head<2>(), x(2), x.segment<2>(3), x(5)};
  }
};

}  // namespace comanip
