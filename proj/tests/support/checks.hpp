#pragma once

// Randomized invariant suites shared by the acceptance binary, the unit
// tests and `comanip selftest`. Each suite compares the library against an
// independent oracle and reports the worst observed deviation.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "comanip/force_allocation.hpp"
#include "comanip/qp_solver.hpp"

namespace comanip::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Skew-symmetry of Hdot - 2C, regressor identity, rotation and mass-matrix checks.
CheckResult analytic_invariants(int draws = 1000, std::uint64_t seed = 1);

/// Adaptive closed loop with a constant disturbance wrench, integrated at
/// step dt: worst per-step increase of V and worst departure of the discrete
/// rate from dV/dt = -s^T K_D s.
struct LyapunovTrace {
  double max_increase = 0.0;
  double max_identity_error = 0.0;
};
LyapunovTrace lyapunov_trace(double dt, double duration = 5.0);
CheckResult lyapunov_monotonicity();

/// Minimizes 1/2 x'Px + c'x over lo <= x <= hi by projected gradient with
/// step 1/lambda_max(P).
Eigen::VectorXd projected_gradient(const Eigen::MatrixXd& P, const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi, int iterations = 100000);
/// Exhaustive active-set enumeration for small general QPs; returns false if infeasible.
bool enumerate_qp(const QpProblem& qp, Eigen::VectorXd& x);
CheckResult qp_oracle(int problems = 500, std::uint64_t seed = 3);

/// Brute-force minimum of the allocation cost over (F, d) for two agents,
/// by a refining grid on the null space of the balance rows.
struct AllocationInstance {
  std::vector<ContactSpec> contacts;
  Vec2 F_world;
  double M_p = 0.0;
  double theta = 0.0;
  Allocation prev;
  AllocatorConfig cfg;
};
AllocationInstance random_allocation_instance(std::uint64_t seed);
double brute_force_allocation(const AllocationInstance& inst, Eigen::VectorXd& F, Eigen::VectorXd& d);
CheckResult allocation_oracle(int instances = 100, std::uint64_t seed = 5);

/// Condensing against rollout, stationarity, friction bounds, step settling.
CheckResult mpc_suite(std::uint64_t seed = 7);

std::vector<CheckResult> run_invariant_suites();

}  // namespace comanip::checks
