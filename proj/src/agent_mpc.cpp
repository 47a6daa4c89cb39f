#include "comanip/agent_mpc.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace comanip {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void MpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("MpcConfig: horizon must be >= 1");
  if (!(dt_mpc > 0.0)) throw std::invalid_argument("MpcConfig: dt_mpc must be positive");
  if ((Q.array() < 0.0).any()) throw std::invalid_argument("MpcConfig: Q must be PSD");
  if ((P_w.array() <= 0.0).any()) throw std::invalid_argument("MpcConfig: P_w must be PD");
}

ContinuousModel continuous_matrices(const AgentParams& params) {
  if (!params.valid()) throw std::invalid_argument("continuous_matrices: invalid agent params");
  ContinuousModel m;
  m.D_bar.setZero();
  m.G_bar.setZero();
  m.D_bar(0, 3) = 1.0;
  m.D_bar(1, 4) = 1.0;
  m.D_bar(2, 5) = 1.0;
  m.D_bar.block<2, 2>(3, 6) = kReactionSign * Mat2::Identity();
  m.G_bar(3, 0) = 1.0 / params.m;
  m.G_bar(4, 1) = 1.0 / params.m;
  m.G_bar(5, 2) = 1.0 / params.I;
  return m;
}

DiscreteModel discretize(const Mat8& D_bar, const Mat83& G_bar, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
  Eigen::Matrix<double, 11, 11> block = Eigen::Matrix<double, 11, 11>::Zero();
  block.topLeftCorner<8, 8>() = D_bar * dt;
  block.topRightCorner<8, 3>() = G_bar * dt;
  const Eigen::Matrix<double, 11, 11> e = block.exp();
  return {e.topLeftCorner<8, 8>(), e.topRightCorner<8, 3>()};
}

AgentState desired_agent_state(const ObjectState& object, const ContactSpec& contact, double d_i, double standoff) {
  const Mat2 r = rotation2(object.theta);
  const Vec2 arm = r * (contact.r_0 + d_i * contact.t_hat - standoff * contact.n_hat);
  const Vec2 n_world = r * contact.n_hat;
  AgentState ref;
  ref.p = object.x_p + arm;
  ref.yaw = std::atan2(n_world.y(), n_world.x());
  ref.v = object.v_p + object.omega * perp(arm);
  ref.yaw_rate = object.omega;
  return ref;
}

Prediction prediction_matrices(const DiscreteModel& model, int horizon) {
  const Index k = horizon;
  Prediction p;
  p.Phi = MatrixXd::Zero(6 * k, 8);
  p.Gamma = MatrixXd::Zero(6 * k, 3 * k);
  // Column blocks of the full 8-state response, trimmed to the 6 tracked rows.
  std::vector<Mat83> a_pow_b(static_cast<std::size_t>(k));
  Mat8 a_pow = Mat8::Identity();
  for (Index j = 0; j < k; ++j) {
    a_pow_b[static_cast<std::size_t>(j)] = a_pow * model.B_d;
    a_pow = model.A_d * a_pow;
    p.Phi.middleRows(6 * j, 6) = a_pow.topRows<6>();
  }
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i <= j; ++i) {
      p.Gamma.block(6 * j, 3 * i, 6, 3) = a_pow_b[static_cast<std::size_t>(j - i)].topRows<6>();
    }
  }
  return p;
}

Vec8 augmented_state(const AgentState& x, const Vec2& f_r_world, double mass) {
  Vec8 eta;
  eta << x.vector(), f_r_world / mass;
  return eta;
}

QpProblem build_condensed_qp(const Vec8& eta0, std::span<const Vec6> refs, const Prediction& pred,
                             const MpcConfig& cfg, const AgentParams& params) {
  const Index k = cfg.horizon;
  if (static_cast<Index>(refs.size()) != k || pred.Phi.rows() != 6 * k) {
    throw std::invalid_argument("build_condensed_qp: horizon mismatch");
  }
  VectorXd ref(6 * k), q_bar(6 * k), p_bar(3 * k);
  for (Index j = 0; j < k; ++j) {
    ref.segment<6>(6 * j) = refs[static_cast<std::size_t>(j)];
    q_bar.segment<6>(6 * j) = cfg.Q;
    p_bar.segment<3>(3 * j) = cfg.P_w;
  }
  const MatrixXd qg = q_bar.asDiagonal() * pred.Gamma;
  QpProblem qp(3 * k);
  qp.P = 2.0 * (pred.Gamma.transpose() * qg);
  qp.P.diagonal() += 2.0 * p_bar;
  qp.c = 2.0 * qg.transpose() * (pred.Phi * eta0 - ref);

  const double fcap = params.force_cap();
  qp.A_in = MatrixXd::Zero(6 * k, 3 * k);
  qp.b_in = VectorXd::Zero(6 * k);
  for (Index j = 0; j < k; ++j) {
    for (Index a = 0; a < 3; ++a) {
      const double cap = a < 2 ? fcap : params.M_cap;
      qp.A_in(6 * j + 2 * a, 3 * j + a) = 1.0;
      qp.A_in(6 * j + 2 * a + 1, 3 * j + a) = -1.0;
      qp.b_in(6 * j + 2 * a) = cap;
      qp.b_in(6 * j + 2 * a + 1) = cap;
    }
  }
  return qp;
}

QpProblem build_condensed_qp(const Vec8& eta0, std::span<const Vec6> refs, const DiscreteModel& model,
                             const MpcConfig& cfg, const AgentParams& params) {
  return build_condensed_qp(eta0, refs, prediction_matrices(model, cfg.horizon), cfg, params);
}

std::vector<Vec6> reference_horizon(const AgentState& ref, double current_yaw, const MpcConfig& cfg) {
  std::vector<Vec6> out(static_cast<std::size_t>(cfg.horizon));
  const double yaw0 = current_yaw + wrap_angle(ref.yaw - current_yaw);
  for (int j = 0; j < cfg.horizon; ++j) {
    const double t = (j + 1) * cfg.dt_mpc;
    Vec6& x = out[static_cast<std::size_t>(j)];
    x << ref.p + t * ref.v, yaw0 + t * ref.yaw_rate, ref.v, ref.yaw_rate;
  }
  return out;
}

namespace {

MpcResult extract(const QpSolution& sol, const Prediction& pred, const Vec8& eta0, const AgentParams& params,
                  int horizon) {
  MpcResult r;
  r.status = sol.status;
  r.u = sol.x.head<3>();
  const VectorXd traj = pred.Phi * eta0 + pred.Gamma * sol.x;
  r.predicted.resize(static_cast<std::size_t>(horizon));
  for (int j = 0; j < horizon; ++j) r.predicted[static_cast<std::size_t>(j)] = traj.segment<6>(6 * j);
  const double fcap = params.force_cap();
  r.saturated = std::abs(r.u.x()) >= fcap - 1e-9 || std::abs(r.u.y()) >= fcap - 1e-9 ||
                std::abs(r.u.z()) >= params.M_cap - 1e-9;
  return r;
}

}  // namespace

AgentMpc::AgentMpc(AgentParams params, MpcConfig cfg) : params_(params), cfg_(cfg) {
  cfg_.validate();
  const ContinuousModel c = continuous_matrices(params_);
  model_ = discretize(c.D_bar, c.G_bar, cfg_.dt_mpc);
  pred_ = prediction_matrices(model_, cfg_.horizon);
}

MpcResult AgentMpc::step(const AgentState& x, const Vec2& f_r_world, std::span<const Vec6> refs,
                         std::optional<double> mu_a) {
  AgentParams p = params_;
  if (mu_a) p.mu_a = *mu_a;
  const Vec8 eta0 = augmented_state(x, f_r_world, p.m);
  const QpProblem qp = build_condensed_qp(eta0, refs, pred_, cfg_, p);
  const QpSolution sol = solver_.solve(qp, std::span<const int>(last_active_));
  if (!sol.ok()) {
    MpcResult r;
    r.u = last_u_;
    r.failed = true;
    r.status = sol.status;
    return r;
  }
  last_active_ = sol.active_set;
  MpcResult r = extract(sol, pred_, eta0, p, cfg_.horizon);
  last_u_ = r.u;
  return r;
}

MpcResult mpc_step(const AgentState& x, const Vec2& f_r_world, std::span<const Vec6> refs,
                   const AgentParams& params, const MpcConfig& cfg, const QpSolver& solver) {
  cfg.validate();
  const ContinuousModel c = continuous_matrices(params);
  const Prediction pred = prediction_matrices(discretize(c.D_bar, c.G_bar, cfg.dt_mpc), cfg.horizon);
  const Vec8 eta0 = augmented_state(x, f_r_world, params.m);
  const QpSolution sol = solver.solve(build_condensed_qp(eta0, refs, pred, cfg, params));
  if (!sol.ok()) {
    MpcResult r;
    r.failed = true;
    r.status = sol.status;
    return r;
  }
  return extract(sol, pred, eta0, params, cfg.horizon);
}

}  // namespace comanip
