#pragma once

// Ground-truth planar rigid-body dynamics of the manipulated object, written
// about an arbitrary body-fixed reference point p:
//
//   tau = H(q) qddot + C(q, qdot) qdot + f_k
//
// Convention for r_p: the mass matrix and Coriolis terms are the standard
// reference-point forms in which r_p enters as H_13 = m r_y, H_23 = -m r_x and
// C qdot = m w^2 R r_p. These are physically exact when r_p is the body-frame
// offset of p measured from the COM, so the COM sits at x_p - R r_p. The
// simulator (friction at the COM, momentum checks, mass drops) uses that same
// convention throughout.

#include <span>
#include <stdexcept>
#include <vector>

#include "comanip/types.hpp"

namespace comanip {

/// Planar embedding of the yaw rotation: 2x2 yaw block and 1 on the moment axis.
template <typename Scalar>
Mat3T<Scalar> rotation(Scalar theta) {
  Mat3T<Scalar> r = Mat3T<Scalar>::Identity();
  r.template topLeftCorner<2, 2>() = rotation2(theta);
  return r;
}

/// World-frame offset R r_p.
template <typename Scalar>
Vec2T<Scalar> world_offset(const ObjectParamsT<Scalar>& params, Scalar theta) {
  return rotation2(theta) * params.r_p;
}

/// World position of the COM.
template <typename Scalar>
Vec2T<Scalar> com_position(const ObjectParamsT<Scalar>& params, const ObjectStateT<Scalar>& s) {
  return s.x_p - world_offset(params, s.theta);
}

/// World velocity of the COM.
template <typename Scalar>
Vec2T<Scalar> com_velocity(const ObjectParamsT<Scalar>& params, const ObjectStateT<Scalar>& s) {
  return s.v_p - s.omega * perp(world_offset(params, s.theta));
}

/// Mass matrix H(theta); throws if the result is not positive definite.
template <typename Scalar>
Mat3T<Scalar> mass_matrix(const ObjectParamsT<Scalar>& params, Scalar theta) {
  const Scalar m = params.m_b;
  const Scalar rx = params.r_p.x(), ry = params.r_p.y();
  Mat3T<Scalar> body;
  body << Scalar(1), Scalar(0), ry,
          Scalar(0), Scalar(1), -rx,
          ry, -rx, params.I_pzz() / m;
  const Mat3T<Scalar> r = rotation(theta);
  Mat3T<Scalar> h = m * r * body * r.transpose();
  // Schur complement of the isotropic translational block is I_Gzz.
  if (!(m > Scalar(0)) || !(params.I_Gzz > Scalar(0))) {
    throw std::invalid_argument("mass_matrix: parameters give a non positive-definite H");
  }
  return h;
}

/// Time derivative of H along the motion (depends only on theta and omega).
template <typename Scalar>
Mat3T<Scalar> mass_matrix_rate(const ObjectParamsT<Scalar>& params, Scalar theta, Scalar omega) {
  const Vec2T<Scalar> a = world_offset(params, theta);
  Mat3T<Scalar> hdot = Mat3T<Scalar>::Zero();
  hdot.template block<2, 1>(0, 2) = params.m_b * omega * a;
  hdot.template block<1, 2>(2, 0) = params.m_b * omega * a.transpose();
  return hdot;
}

/// Full Coriolis matrix C(q, qdot), chosen so that Hdot - 2C is skew-symmetric.
template <typename Scalar>
Mat3T<Scalar> coriolis_matrix(const ObjectParamsT<Scalar>& params, Scalar theta, Scalar omega) {
  Mat3T<Scalar> c = Mat3T<Scalar>::Zero();
  c.template block<2, 1>(0, 2) = params.m_b * omega * world_offset(params, theta);
  return c;
}

/// C(q, qdot) qdot = m_b w^2 R [r_x; r_y; 0].
template <typename Scalar>
Vec3T<Scalar> coriolis_vector(const ObjectParamsT<Scalar>& params, Scalar theta, Scalar omega) {
  Vec3T<Scalar> v = Vec3T<Scalar>::Zero();
  v.template head<2>() = params.m_b * omega * omega * world_offset(params, theta);
  return v;
}

struct FrictionModel {
  double v_eps = 1e-2;      // m/s, stick threshold on COM speed
  double omega_eps = 5e-2;  // rad/s, stick threshold and tanh width for yaw rate
};

struct FrictionResult {
  Wrench wrench;  // physical friction wrench on the object, about p
  bool sticking = false;
};

/// Coulomb friction at the COM with effective-radius yaw friction.
///
/// `applied` is every other wrench acting on the object (about p); in the
/// static regime friction opposes it up to the Coulomb caps. The returned
/// wrench is the friction acting on the object, so Eq. of motion uses
/// f_k = -friction.
inline FrictionResult friction(const ObjectParams& params, const ObjectState& state, const Wrench& applied,
                               const FrictionModel& model = {}) {
  FrictionResult out;
  const double cap_f = params.mu * params.m_b * params.g;
  const double cap_m = cap_f * params.rho_eff;
  if (cap_f <= 0.0) return out;

  const Vec2 com_arm = -world_offset(params, state.theta);  // p -> COM
  const Vec2 v_g = com_velocity(params, state);
  const double speed = v_g.norm();

  Vec2 f;
  double m_g;
  if (speed > model.v_eps || std::abs(state.omega) > model.omega_eps) {
    f = -cap_f * v_g / std::max(speed, model.v_eps);
    m_g = -cap_m * std::tanh(state.omega / model.omega_eps);
  } else {
    const Vec2 f_app = applied.f;
    const double m_app_g = applied.m - cross2(com_arm, f_app);
    const double fn = f_app.norm();
    const bool force_holds = fn <= cap_f;
    const bool moment_holds = std::abs(m_app_g) <= cap_m;
    f = force_holds ? Vec2(-f_app) : Vec2(-cap_f * f_app / fn);
    m_g = moment_holds ? -m_app_g : -std::copysign(cap_m, m_app_g);
    out.sticking = force_holds && moment_holds;
  }
  out.wrench.f = f;
  out.wrench.m = m_g + cross2(com_arm, f);
  return out;
}

inline Wrench friction_wrench(const ObjectParams& params, const ObjectState& state, const Wrench& applied,
                              const FrictionModel& model = {}) {
  return friction(params, state, applied, model).wrench;
}

/// Result of resolving unilateral agent contacts.
struct ContactResult {
  Wrench on_object;            // world frame, moment about p
  std::vector<Vec2> on_agent;  // world-frame reaction on each agent
  std::vector<bool> in_contact;
  std::vector<double> slide;  // measured slide coordinate along t_hat
  std::vector<double> gap;    // separation from the standoff pose, >0 means behind
};

/// Body-frame placement of agent i relative to its contact face.
inline void contact_coordinates(const ObjectState& state, const ContactSpec& c, const AgentState& agent,
                                double& slide, double& gap) {
  const Vec2 b = rotation2(state.theta).transpose() * (agent.p - state.x_p) - c.r_0;
  slide = b.dot(c.t_hat);
  gap = -b.dot(c.n_hat) - c.standoff;
}

/// Gathers the push-only contact forces: agent i in contact transmits
/// forces[i] >= 0 along its face normal at its measured slide position.
inline ContactResult contact_resolve(const ObjectState& state, std::span<const ContactSpec> contacts,
                                     std::span<const AgentState> agents, std::span<const double> forces,
                                     double tol) {
  const std::size_t n = contacts.size();
  if (agents.size() != n || forces.size() != n) {
    throw std::invalid_argument("contact_resolve: size mismatch");
  }
  ContactResult out;
  out.on_agent.assign(n, Vec2::Zero());
  out.in_contact.assign(n, false);
  out.slide.assign(n, 0.0);
  out.gap.assign(n, 0.0);
  const Mat2 r = rotation2(state.theta);
  for (std::size_t i = 0; i < n; ++i) {
    const ContactSpec& c = contacts[i];
    double slide, gap;
    contact_coordinates(state, c, agents[i], slide, gap);
    out.slide[i] = slide;
    out.gap[i] = gap;
    const bool on_face = slide >= c.d_min - tol && slide <= c.d_max + tol;
    out.in_contact[i] = gap <= tol && on_face;
    if (!out.in_contact[i]) continue;
    const double mag = std::max(0.0, forces[i]);
    const Vec2 f_world = r * (mag * c.n_hat);
    const Vec2 arm = r * c.lever(std::clamp(slide, c.d_min, c.d_max));
    out.on_object.f += f_world;
    out.on_object.m += cross2(arm, f_world);
    out.on_agent[i] = -f_world;
  }
  return out;
}

/// Semi-implicit Euler step of the object under the applied wrench `tau`
/// (world frame, about p) plus terrain friction.
///
/// Generalized accelerations come from H^-1 (tau - C qdot - f_k). The
/// velocity update is carried on the COM twist, which is the same dynamics
/// in the coordinates where free motion is exactly momentum-conserving.
inline ObjectState step(const ObjectState& state, const ObjectParams& params, const Wrench& tau, double dt,
                        const FrictionModel& model = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const FrictionResult fr = friction(params, state, tau, model);
  if (fr.sticking) {
    ObjectState out = state;
    out.v_p.setZero();
    out.omega = 0.0;
    return out;
  }
  const Mat3 h = mass_matrix(params, state.theta);
  const Vec3 rhs = tau.stacked() - coriolis_vector(params, state.theta, state.omega) + fr.wrench.stacked();
  const Vec3 qdd = h.ldlt().solve(rhs);
  if (!qdd.allFinite()) throw std::runtime_error("step: non-finite acceleration");

  // COM acceleration from the reference-point acceleration.
  const Vec2 a = world_offset(params, state.theta);
  const Vec2 acc_g = qdd.head<2>() - qdd.z() * perp(a) + state.omega * state.omega * a;

  const Vec2 x_g = com_position(params, state);
  const Vec2 v_g = com_velocity(params, state) + dt * acc_g;
  const double omega = state.omega + dt * qdd.z();
  const double theta = state.theta + dt * omega;

  ObjectState out;
  out.theta = wrap_angle(theta);
  out.omega = omega;
  const Vec2 a_next = rotation2(theta) * params.r_p;
  out.x_p = (x_g + dt * v_g) + a_next;
  out.v_p = v_g + omega * perp(a_next);
  if (!out.finite()) throw std::runtime_error("step: non-finite state");
  return out;
}

}  // namespace comanip
