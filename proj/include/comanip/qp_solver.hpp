#pragma once

// Dense primal active-set solver for small strictly convex QPs:
//
//   minimize    1/2 x^T P x + c^T x
//   subject to  A_eq x  = b_eq
//               A_in x <= b_in
//
// Phase 1 finds a feasible point with an auxiliary QP that starts feasible by
// construction; phase 2 runs the classic primal active-set iteration with
// range-space solves of the equality-constrained subproblems.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace comanip {

struct QpProblem {
  Eigen::MatrixXd P;
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  QpProblem() = default;
  /// Unconstrained problem of dimension n (P = 0, c = 0).
  explicit QpProblem(Eigen::Index n);

  Eigen::Index num_vars() const { return c.size(); }
  Eigen::Index num_eq() const { return A_eq.rows(); }
  Eigen::Index num_in() const { return A_in.rows(); }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(P * x) + c.dot(x); }

  /// Throws std::invalid_argument on inconsistent dimensions.
  void check_dimensions() const;
};

enum class QpStatus { optimal, infeasible, max_iter };

const char* to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::infeasible;
  std::vector<int> active_set;  // indices into the inequality rows
  Eigen::VectorXd y_eq;         // equality multipliers
  Eigen::VectorXd lambda_in;    // inequality multipliers, >= 0 at optimum
  double kkt_residual = 0.0;
  int iterations = 0;
  bool regularized = false;
  std::vector<double> objective_trace;  // phase-2 objective after each iteration

  bool ok() const { return status == QpStatus::optimal; }
};

struct QpOptions {
  double regularization_threshold = 1e-9;
  double regularization = 1e-8;
  double feasibility_tol = 1e-9;
  double kkt_tol = 1e-8;
  int max_iter_factor = 50;
};

/// Largest of stationarity, primal feasibility, dual feasibility and
/// complementarity violations (infinity norms).
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& y_eq,
                    const Eigen::VectorXd& lambda_in);

class QpSolver {
 public:
  explicit QpSolver(QpOptions options = {}) : options_(options) {}

  QpSolution solve(const QpProblem& problem, std::optional<std::span<const int>> warm_start = std::nullopt) const;

  const QpOptions& options() const { return options_; }

 private:
  QpOptions options_;
};

inline QpSolution solve(const QpProblem& problem, std::optional<std::span<const int>> warm_start = std::nullopt) {
  return QpSolver{}.solve(problem, warm_start);
}

/// Plain-text dump: a "qp n m_eq m_in" header followed by the labelled
/// blocks P, c, A_eq, b_eq, A_in, b_in, each row-major and whitespace-separated.
void write_problem(std::ostream& os, const QpProblem& problem);
QpProblem read_problem(std::istream& is);

}  // namespace comanip
