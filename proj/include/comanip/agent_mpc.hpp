#pragma once

// Per-agent loco-manipulation MPC on a planar single-rigid-body model.
//
// Agent state X = [p (2), yaw, v (2), yaw_rate]; input u = [f_x, f_y, m_z]
// (net ground reaction and yaw moment). The commanded manipulation force
// enters as an augmented state eta_aug = f_r^w / m held constant over the
// horizon:
//
//   eta = [X; eta_aug],   eta_dot = D_bar eta + G_bar u,
//   v_dot = u_f / m + kReactionSign * eta_aug.

#include <optional>
#include <span>
#include <vector>

#include "comanip/qp_solver.hpp"
#include "comanip/types.hpp"

namespace comanip {

/// The agent feels the reaction of the force it applies to the object.
inline constexpr double kReactionSign = -1.0;

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat83 = Eigen::Matrix<double, 8, 3>;

struct AgentParams {
  double m = 12.0;
  double I = 0.5;
  double mu_a = 0.6;
  double g = 9.81;
  double M_cap = 20.0;

  /// Per-axis cap of the linearized friction pyramid.
  double force_cap() const { return mu_a * m * g; }
  bool valid() const { return m > 0 && I > 0 && mu_a > 0 && g > 0 && M_cap > 0; }
};

struct MpcConfig {
  int horizon = 10;
  double dt_mpc = 2.0 / 150.0;
  Vec6 Q = (Vec6() << 400, 400, 160, 10, 10, 4).finished();
  Vec3 P_w = Vec3::Constant(1e-6);

  void validate() const;
};

struct ContinuousModel {
  Mat8 D_bar;
  Mat83 G_bar;
};

ContinuousModel continuous_matrices(const AgentParams& params);

struct DiscreteModel {
  Mat8 A_d;
  Mat83 B_d;
};

/// Exact zero-order-hold discretization via the exponential of [[D, G], [0, 0]] dt.
DiscreteModel discretize(const Mat8& D_bar, const Mat83& G_bar, double dt);

/// Standoff pose behind the contact point at slide d_i, moving rigidly with the object.
AgentState desired_agent_state(const ObjectState& object, const ContactSpec& contact, double d_i, double standoff);

/// Condensed prediction: stacked X_1..X_k = Phi eta_0 + Gamma U.
struct Prediction {
  Eigen::MatrixXd Phi;    // 6k x 8
  Eigen::MatrixXd Gamma;  // 6k x 3k
};

Prediction prediction_matrices(const DiscreteModel& model, int horizon);

Vec8 augmented_state(const AgentState& x, const Vec2& f_r_world, double mass);

/// Tracking QP over U = [u_0; ...; u_{k-1}] with per-step friction-pyramid and moment bounds.
QpProblem build_condensed_qp(const Vec8& eta0, std::span<const Vec6> refs, const Prediction& pred,
                             const MpcConfig& cfg, const AgentParams& params);
QpProblem build_condensed_qp(const Vec8& eta0, std::span<const Vec6> refs, const DiscreteModel& model,
                             const MpcConfig& cfg, const AgentParams& params);

/// Reference states over the horizon, extrapolating the reference twist and
/// unwrapping yaw next to the current heading.
std::vector<Vec6> reference_horizon(const AgentState& ref, double current_yaw, const MpcConfig& cfg);

struct MpcResult {
  Vec3 u = Vec3::Zero();
  std::vector<Vec6> predicted;
  bool saturated = false;
  bool failed = false;
  QpStatus status = QpStatus::optimal;
};

/// Receding-horizon controller for one agent. Holds the discretized model
/// and the previous solution for warm starts; not shared across threads.
class AgentMpc {
 public:
  AgentMpc(AgentParams params, MpcConfig cfg);

  /// Solves the horizon problem and returns its first input. `mu_a`
  /// overrides the friction coefficient for this solve (terrain zones).
  MpcResult step(const AgentState& x, const Vec2& f_r_world, std::span<const Vec6> refs,
                 std::optional<double> mu_a = std::nullopt);

  const AgentParams& params() const { return params_; }
  const MpcConfig& config() const { return cfg_; }
  const DiscreteModel& model() const { return model_; }

 private:
  AgentParams params_;
  MpcConfig cfg_;
  DiscreteModel model_;
  Prediction pred_;
  QpSolver solver_;
  Vec3 last_u_ = Vec3::Zero();
  std::vector<int> last_active_;
};

/// One-shot form of AgentMpc::step.
MpcResult mpc_step(const AgentState& x, const Vec2& f_r_world, std::span<const Vec6> refs,
                   const AgentParams& params, const MpcConfig& cfg, const QpSolver& solver = QpSolver{});

}  // namespace comanip
