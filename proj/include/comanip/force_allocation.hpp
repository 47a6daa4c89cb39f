#pragma once

// Distribution of the commanded object wrench across push-only agents.
//
// The balance rows contain the product F_i d_i. With u_i := F_i d_i the
// program becomes a convex QP in z = [F; u]:
//
//   sum_i F_i n_i                               = R^T F_world   (2 rows, body)
//   sum_i F_i (r0_i x n_i) + u_i (t_i x n_i)    = M_p
//   F_i >= 0,   d_min F_i <= u_i <= d_max F_i
//
// with cost g1 |F|^2 + g2 |F - F_prev|^2 + g3 |u - d_prev o F|^2.

#include <span>
#include <vector>

#include "comanip/qp_solver.hpp"
#include "comanip/types.hpp"

namespace comanip {

struct AllocatorConfig {
  double gamma1 = 1.0;
  double gamma2 = 0.1;
  double gamma3 = 10.0;
  double F_eps = 0.1;
  double relax_weight = 1e4;
  double u_regularization = 1e-8;

  void validate() const;
};

struct Allocation {
  Eigen::VectorXd F_r;
  Eigen::VectorXd d;
  Eigen::VectorXd u;                    // lifted slide moments F o d as solved
  Vec3 residual_wrench = Vec3::Zero();  // body-frame [force; moment] balance error of (F, u)
  QpStatus status = QpStatus::optimal;
  bool relaxed = false;
  std::vector<int> active_set;
  std::vector<std::size_t> qp_agents;  // agents that were QP columns, for warm starts

  static Allocation zeros(std::size_t n);
  std::size_t size() const { return static_cast<std::size_t>(F_r.size()); }
};

/// The allocation QP over the active contacts, plus the map from QP columns
/// back to agent indices.
struct AllocationQp {
  QpProblem qp;
  std::vector<std::size_t> agents;  // active agent for QP column block k
};

AllocationQp build_allocation_qp(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                                 const Allocation& prev, const AllocatorConfig& cfg);

/// Optimal forces and slide positions for the active contacts.
Allocation allocate(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                    const Allocation& prev, const AllocatorConfig& cfg, const QpSolver& solver = QpSolver{});

/// Baseline: slides follow d_i = k_p_d (theta_d - theta) without clamping,
/// forces from the balance rows with d held fixed.
Allocation heuristic_allocate(const Vec2& F_world, double M_p, double theta, double theta_d,
                              std::span<const ContactSpec> contacts, const Allocation& prev, double k_p_d,
                              const AllocatorConfig& cfg, const QpSolver& solver = QpSolver{});

/// Body-frame balance residual [sum F n - R^T F; sum r x f - M] for forces F
/// and lifted slide moments u = F o d.
Vec3 balance_residual(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                      const Eigen::VectorXd& F_r, const Eigen::VectorXd& u);

/// Allocation cost evaluated in (F, d) form.
double allocation_cost(const Eigen::VectorXd& F_r, const Eigen::VectorXd& d, const Allocation& prev,
                       const AllocatorConfig& cfg);

}  // namespace comanip
