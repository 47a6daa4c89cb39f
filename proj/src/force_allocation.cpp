#include "comanip/force_allocation.hpp"

#include <stdexcept>

namespace comanip {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void AllocatorConfig::validate() const {
  if (gamma1 < 0.0 || gamma2 < 0.0 || gamma3 < 0.0) throw std::invalid_argument("AllocatorConfig: negative weight");
  if (!(gamma1 + gamma2 > 0.0)) throw std::invalid_argument("AllocatorConfig: gamma1 + gamma2 must be positive");
  if (F_eps < 0.0) throw std::invalid_argument("AllocatorConfig: F_eps must be >= 0");
}

Allocation Allocation::zeros(std::size_t n) {
  Allocation a;
  a.F_r = VectorXd::Zero(static_cast<Index>(n));
  a.d = VectorXd::Zero(static_cast<Index>(n));
  a.u = VectorXd::Zero(static_cast<Index>(n));
  return a;
}

namespace {

Allocation previous_or_zero(const Allocation& prev, std::size_t n) {
  if (prev.size() == n && prev.d.size() == static_cast<Index>(n)) return prev;
  return Allocation::zeros(n);
}

std::vector<std::size_t> active_agents(std::span<const ContactSpec> contacts) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    if (!contacts[i].valid()) throw std::invalid_argument("allocation: invalid contact geometry");
    if (contacts[i].active) idx.push_back(i);
  }
  if (idx.empty()) throw std::invalid_argument("allocation: no active contacts");
  return idx;
}

// Balance rows over z = [F; u] restricted to `agents`.
void balance_rows(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                  const std::vector<std::size_t>& agents, MatrixXd& a, VectorXd& b) {
  const Index na = static_cast<Index>(agents.size());
  a = MatrixXd::Zero(3, 2 * na);
  b.resize(3);
  b.head<2>() = rotation2(theta).transpose() * F_world;
  b(2) = M_p;
  for (Index k = 0; k < na; ++k) {
    const ContactSpec& c = contacts[agents[static_cast<std::size_t>(k)]];
    a.block<2, 1>(0, k) = c.n_hat;
    a(2, k) = cross2(c.r_0, c.n_hat);
    a(2, na + k) = cross2(c.t_hat, c.n_hat);
  }
}

// Moves the equality rows into the cost with weight w.
QpProblem relax(const QpProblem& qp, double w) {
  QpProblem r = qp;
  r.P += 2.0 * w * qp.A_eq.transpose() * qp.A_eq;
  r.c -= 2.0 * w * qp.A_eq.transpose() * qp.b_eq;
  r.A_eq.resize(0, qp.num_vars());
  r.b_eq.resize(0);
  return r;
}

Allocation finish(const QpSolution& sol, const AllocationQp& built, const Vec2& F_world, double M_p, double theta,
                  std::span<const ContactSpec> contacts, const Allocation& prev, const AllocatorConfig& cfg,
                  bool clamp_d, const Eigen::VectorXd* fixed_d) {
  const std::size_t n = contacts.size();
  Allocation out = Allocation::zeros(n);
  out.d = prev.d;
  const Index na = static_cast<Index>(built.agents.size());
  for (Index k = 0; k < na; ++k) {
    const std::size_t i = built.agents[static_cast<std::size_t>(k)];
    const ContactSpec& c = contacts[i];
    const double f = std::max(0.0, sol.x(k));
    const double u = sol.x(na + k);
    out.F_r(static_cast<Index>(i)) = f;
    out.u(static_cast<Index>(i)) = u;
    double d;
    if (fixed_d) {
      d = (*fixed_d)(static_cast<Index>(i));
    } else {
      d = f > cfg.F_eps ? u / f : prev.d(static_cast<Index>(i));
    }
    out.d(static_cast<Index>(i)) = clamp_d ? std::clamp(d, c.d_min, c.d_max) : d;
  }
  if (fixed_d) {
    for (std::size_t i = 0; i < n; ++i) out.d(static_cast<Index>(i)) = (*fixed_d)(static_cast<Index>(i));
  }
  out.residual_wrench = balance_residual(F_world, M_p, theta, contacts, out.F_r, out.u);
  out.status = sol.status;
  out.active_set = sol.active_set;
  out.qp_agents = built.agents;
  return out;
}

}  // namespace

Vec3 balance_residual(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                      const VectorXd& F_r, const VectorXd& u) {
  Vec3 r = Vec3::Zero();
  r.head<2>() = -rotation2(theta).transpose() * F_world;
  r(2) = -M_p;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const ContactSpec& c = contacts[i];
    const double f = F_r(static_cast<Index>(i));
    r.head<2>() += f * c.n_hat;
    r(2) += f * cross2(c.r_0, c.n_hat) + u(static_cast<Index>(i)) * cross2(c.t_hat, c.n_hat);
  }
  return r;
}

double allocation_cost(const VectorXd& F_r, const VectorXd& d, const Allocation& prev, const AllocatorConfig& cfg) {
  const Allocation p = previous_or_zero(prev, static_cast<std::size_t>(F_r.size()));
  const VectorXd u = F_r.cwiseProduct(d);
  const VectorXd slide = u - p.d.cwiseProduct(F_r);
  return cfg.gamma1 * F_r.squaredNorm() + cfg.gamma2 * (F_r - p.F_r).squaredNorm() +
         cfg.gamma3 * slide.squaredNorm() + cfg.u_regularization * u.squaredNorm();
}

AllocationQp build_allocation_qp(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                                 const Allocation& prev_in, const AllocatorConfig& cfg) {
  cfg.validate();
  const Allocation prev = previous_or_zero(prev_in, contacts.size());
  AllocationQp out;
  out.agents = active_agents(contacts);
  const Index na = static_cast<Index>(out.agents.size());
  QpProblem& qp = out.qp;
  qp = QpProblem(2 * na);

  VectorXd d_prev(na), f_prev(na);
  for (Index k = 0; k < na; ++k) {
    d_prev(k) = prev.d(static_cast<Index>(out.agents[static_cast<std::size_t>(k)]));
    f_prev(k) = prev.F_r(static_cast<Index>(out.agents[static_cast<std::size_t>(k)]));
  }
  // 1/2 z^T P z + c^T z equals the weighted cost up to a constant.
  const VectorXd dd = d_prev.cwiseAbs2();
  qp.P.topLeftCorner(na, na).diagonal() = 2.0 * ((cfg.gamma1 + cfg.gamma2) * VectorXd::Ones(na) + cfg.gamma3 * dd);
  qp.P.topRightCorner(na, na).diagonal() = -2.0 * cfg.gamma3 * d_prev;
  qp.P.bottomLeftCorner(na, na).diagonal() = -2.0 * cfg.gamma3 * d_prev;
  qp.P.bottomRightCorner(na, na).diagonal().setConstant(2.0 * (cfg.gamma3 + cfg.u_regularization));
  qp.c.head(na) = -2.0 * cfg.gamma2 * f_prev;

  balance_rows(F_world, M_p, theta, contacts, out.agents, qp.A_eq, qp.b_eq);

  qp.A_in = MatrixXd::Zero(3 * na, 2 * na);
  qp.b_in = VectorXd::Zero(3 * na);
  for (Index k = 0; k < na; ++k) {
    const ContactSpec& c = contacts[out.agents[static_cast<std::size_t>(k)]];
    qp.A_in(3 * k, k) = -1.0;  // F >= 0
    qp.A_in(3 * k + 1, k) = c.d_min;  // d_min F - u <= 0
    qp.A_in(3 * k + 1, na + k) = -1.0;
    qp.A_in(3 * k + 2, k) = -c.d_max;  // u - d_max F <= 0
    qp.A_in(3 * k + 2, na + k) = 1.0;
  }
  return out;
}

Allocation allocate(const Vec2& F_world, double M_p, double theta, std::span<const ContactSpec> contacts,
                    const Allocation& prev_in, const AllocatorConfig& cfg, const QpSolver& solver) {
  const Allocation prev = previous_or_zero(prev_in, contacts.size());
  const AllocationQp built = build_allocation_qp(F_world, M_p, theta, contacts, prev, cfg);

  std::optional<std::span<const int>> warm;
  if (prev.qp_agents == built.agents && !prev.relaxed) warm = std::span<const int>(prev.active_set);

  QpSolution sol = solver.solve(built.qp, warm);
  bool relaxed = false;
  if (!sol.ok()) {
    sol = solver.solve(relax(built.qp, cfg.relax_weight));
    relaxed = true;
  }
  Allocation out = finish(sol, built, F_world, M_p, theta, contacts, prev, cfg, true, nullptr);
  out.relaxed = relaxed;
  return out;
}

Allocation heuristic_allocate(const Vec2& F_world, double M_p, double theta, double theta_d,
                              std::span<const ContactSpec> contacts, const Allocation& prev_in, double k_p_d,
                              const AllocatorConfig& cfg, const QpSolver& solver) {
  const Allocation prev = previous_or_zero(prev_in, contacts.size());
  const VectorXd d = VectorXd::Constant(static_cast<Index>(contacts.size()), k_p_d * wrap_angle(theta_d - theta));

  AllocationQp built = build_allocation_qp(F_world, M_p, theta, contacts, prev, cfg);
  const Index na = static_cast<Index>(built.agents.size());
  QpProblem& qp = built.qp;

  // Slides are fixed: u_k = d_k F_k, and only F >= 0 remains as a bound.
  MatrixXd a_fix = MatrixXd::Zero(na, 2 * na);
  for (Index k = 0; k < na; ++k) {
    a_fix(k, k) = -d(static_cast<Index>(built.agents[static_cast<std::size_t>(k)]));
    a_fix(k, na + k) = 1.0;
  }
  MatrixXd a_in = MatrixXd::Zero(na, 2 * na);
  for (Index k = 0; k < na; ++k) a_in(k, k) = -1.0;
  qp.A_in = a_in;
  qp.b_in = VectorXd::Zero(na);

  QpProblem full = qp;
  full.A_eq.resize(3 + na, 2 * na);
  full.A_eq << qp.A_eq, a_fix;
  full.b_eq.resize(3 + na);
  full.b_eq << qp.b_eq, VectorXd::Zero(na);

  QpSolution sol = solver.solve(full);
  bool relaxed = false;
  if (!sol.ok()) {
    QpProblem soft = relax(qp, cfg.relax_weight);
    soft.A_eq = a_fix;
    soft.b_eq = VectorXd::Zero(na);
    sol = solver.solve(soft);
    relaxed = true;
  }
  Allocation out = finish(sol, built, F_world, M_p, theta, contacts, prev, cfg, false, &d);
  out.relaxed = relaxed;
  return out;
}

}  // namespace comanip
