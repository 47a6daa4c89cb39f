#include "comanip/qp_solver.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace comanip {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

QpProblem::QpProblem(Index n)
    : P(MatrixXd::Zero(n, n)),
      c(VectorXd::Zero(n)),
      A_eq(0, n),
      b_eq(0),
      A_in(0, n),
      b_in(0) {}

void QpProblem::check_dimensions() const {
  const Index n = c.size();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("QpProblem: P must be n x n");
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) throw std::invalid_argument("QpProblem: bad equality block");
  if (A_in.cols() != n || A_in.rows() != b_in.size()) throw std::invalid_argument("QpProblem: bad inequality block");
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iter: return "max_iter";
  }
  return "?";
}

double kkt_residual(const QpProblem& pr, const VectorXd& x, const VectorXd& y_eq, const VectorXd& lambda_in) {
  double r = 0.0;
  VectorXd grad = pr.P * x + pr.c;
  if (pr.num_eq() > 0) {
    grad += pr.A_eq.transpose() * y_eq;
    r = std::max(r, (pr.A_eq * x - pr.b_eq).cwiseAbs().maxCoeff());
  }
  if (pr.num_in() > 0) {
    grad += pr.A_in.transpose() * lambda_in;
    const VectorXd slack = pr.A_in * x - pr.b_in;
    r = std::max(r, slack.cwiseMax(0.0).maxCoeff());
    r = std::max(r, (-lambda_in).cwiseMax(0.0).maxCoeff());
    r = std::max(r, lambda_in.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  if (grad.size() > 0) r = std::max(r, grad.cwiseAbs().maxCoeff());
  return r;
}

namespace {

// Strictly convex QP in solver-internal form (equalities full row rank).
struct Kernel {
  MatrixXd P;
  Eigen::LLT<MatrixXd> chol;
  VectorXd c;
  MatrixXd A_eq;
  VectorXd b_eq;
  MatrixXd A_in;
  VectorXd b_in;

  Index n() const { return c.size(); }

  MatrixXd working_rows(const std::vector<int>& w) const {
    MatrixXd a(A_eq.rows() + static_cast<Index>(w.size()), n());
    a.topRows(A_eq.rows()) = A_eq;
    for (std::size_t k = 0; k < w.size(); ++k) a.row(A_eq.rows() + static_cast<Index>(k)) = A_in.row(w[k]);
    return a;
  }

  VectorXd working_rhs(const std::vector<int>& w) const {
    VectorXd b(b_eq.size() + static_cast<Index>(w.size()));
    b.head(b_eq.size()) = b_eq;
    for (std::size_t k = 0; k < w.size(); ++k) b(b_eq.size() + static_cast<Index>(k)) = b_in(w[k]);
    return b;
  }

  // Solves [P A^T; A 0] [x; mult] = [rhs_x; rhs_a] for the working rows A.
  void kkt_solve(const MatrixXd& a, const VectorXd& rhs_x, const VectorXd& rhs_a, VectorXd& x, VectorXd& mult) const {
    if (a.rows() == 0) {
      x = chol.solve(rhs_x);
      mult.resize(0);
      return;
    }
    const Index m = a.rows();
    MatrixXd kkt = MatrixXd::Zero(n() + m, n() + m);
    kkt.topLeftCorner(n(), n()) = P;
    kkt.topRightCorner(n(), m) = a.transpose();
    kkt.bottomLeftCorner(m, n()) = a;
    VectorXd rhs(n() + m);
    rhs << rhs_x, rhs_a;
    const VectorXd sol = kkt.partialPivLu().solve(rhs);
    x = sol.head(n());
    mult = sol.tail(m);
  }

  // Minimizer of the model on {A_W p = 0} at x: returns step p and the
  // multipliers of the working rows at x + p.
  void step(const VectorXd& x, const std::vector<int>& w, VectorXd& p, VectorXd& mult) const {
    const MatrixXd a = working_rows(w);
    kkt_solve(a, -(P * x + c), VectorXd::Zero(a.rows()), p, mult);
  }

  // Minimizer of the objective on {A_W x = b_W}.
  void point(const std::vector<int>& w, VectorXd& x, VectorXd& mult) const {
    kkt_solve(working_rows(w), -c, working_rhs(w), x, mult);
  }

  double objective(const VectorXd& x) const { return 0.5 * x.dot(P * x) + c.dot(x); }

  double max_violation(const VectorXd& x) const {
    double v = 0.0;
    if (A_eq.rows() > 0) v = (A_eq * x - b_eq).cwiseAbs().maxCoeff();
    if (A_in.rows() > 0) v = std::max(v, (A_in * x - b_in).maxCoeff());
    return v;
  }
};

struct LoopResult {
  VectorXd x;
  std::vector<int> w;
  VectorXd mult;
  int iterations = 0;
  bool converged = false;
};

// Keeps a subset of `candidates` whose rows are linearly independent together
// with the equality rows, scanning in index order.
std::vector<int> independent_subset(const Kernel& k, const std::vector<int>& candidates) {
  std::vector<int> kept;
  MatrixXd rows = k.A_eq;
  for (int i : candidates) {
    if (rows.rows() >= k.n()) break;
    MatrixXd trial(rows.rows() + 1, k.n());
    trial.topRows(rows.rows()) = rows;
    trial.bottomRows(1) = k.A_in.row(i);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(trial.transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() == trial.rows()) {
      rows = std::move(trial);
      kept.push_back(i);
    }
  }
  return kept;
}

LoopResult active_set_loop(const Kernel& k, VectorXd x, std::vector<int> w, int max_iter,
                           std::vector<double>* trace) {
  LoopResult out;
  const Index neq = k.A_eq.rows();
  const Index nin = k.A_in.rows();
  std::vector<char> in_w(static_cast<std::size_t>(nin), 0);
  for (int i : w) in_w[static_cast<std::size_t>(i)] = 1;

  VectorXd p, mult;
  bool at_subspace_min = false;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    k.step(x, w, p, mult);
    const double step_tol = 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>());
    if (at_subspace_min || p.lpNorm<Eigen::Infinity>() <= step_tol) {
      at_subspace_min = false;
      x += p;
      int drop = -1;
      double most_negative = -1e-12;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double lam = mult(neq + static_cast<Index>(j));
        if (lam < most_negative || (drop >= 0 && lam == most_negative && w[j] < w[static_cast<std::size_t>(drop)])) {
          most_negative = lam;
          drop = static_cast<int>(j);
        }
      }
      if (drop < 0) {
        out.converged = true;
        break;
      }
      in_w[static_cast<std::size_t>(w[static_cast<std::size_t>(drop)])] = 0;
      w.erase(w.begin() + drop);
    } else {
      double alpha = 1.0;
      int blocking = -1;
      if (nin > 0) {
        const VectorXd ap = k.A_in * p;
        const VectorXd ax = k.A_in * x;
        const double p_norm = p.norm();
        for (Index i = 0; i < nin; ++i) {
          if (in_w[static_cast<std::size_t>(i)] || ap(i) <= 1e-12 * k.A_in.row(i).norm() * p_norm) {
            continue;
          }
          const double ratio = std::max(0.0, (k.b_in(i) - ax(i)) / ap(i));
          if (ratio < alpha) {
            alpha = ratio;
            blocking = static_cast<int>(i);
          }
        }
      }
      x += alpha * p;
      if (blocking >= 0) {
        in_w[static_cast<std::size_t>(blocking)] = 1;
        w.push_back(blocking);
      } else {
        at_subspace_min = true;
      }
    }
    if (trace) trace->push_back(k.objective(x));
  }
  // Multipliers consistent with the final working set.
  k.step(x, w, p, mult);
  out.x = std::move(x);
  out.w = std::move(w);
  out.mult = std::move(mult);
  return out;
}

}  // namespace

QpSolution QpSolver::solve(const QpProblem& problem, std::optional<std::span<const int>> warm_start) const {
  problem.check_dimensions();
  const Index n = problem.num_vars();
  const Index nin = problem.num_in();
  const int max_iter = options_.max_iter_factor * static_cast<int>(n + nin);

  QpSolution sol;
  sol.x = VectorXd::Zero(n);
  sol.y_eq = VectorXd::Zero(problem.num_eq());
  sol.lambda_in = VectorXd::Zero(nin);

  Kernel k;
  k.P = 0.5 * (problem.P + problem.P.transpose());
  if (n > 0) {
    const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(k.P, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lmin < options_.regularization_threshold) {
      k.P.diagonal().array() += options_.regularization;
      sol.regularized = true;
    }
  }
  k.chol.compute(k.P);
  if (k.chol.info() != Eigen::Success) throw std::invalid_argument("QpSolver: P is not positive definite");
  k.c = problem.c;
  k.A_in = problem.A_in;
  k.b_in = problem.b_in;

  // Drop linearly dependent equality rows, keeping the lowest indices.
  std::vector<Index> eq_rows;
  if (problem.num_eq() > 0) {
    for (Index i = 0; i < problem.num_eq(); ++i) {
      MatrixXd trial(static_cast<Index>(eq_rows.size()) + 1, n);
      for (std::size_t j = 0; j < eq_rows.size(); ++j) trial.row(static_cast<Index>(j)) = problem.A_eq.row(eq_rows[j]);
      trial.bottomRows(1) = problem.A_eq.row(i);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(trial.transpose());
      qr.setThreshold(1e-10);
      if (qr.rank() == trial.rows()) eq_rows.push_back(i);
    }
  }
  k.A_eq.resize(static_cast<Index>(eq_rows.size()), n);
  k.b_eq.resize(static_cast<Index>(eq_rows.size()));
  for (std::size_t j = 0; j < eq_rows.size(); ++j) {
    k.A_eq.row(static_cast<Index>(j)) = problem.A_eq.row(eq_rows[j]);
    k.b_eq(static_cast<Index>(j)) = problem.b_eq(eq_rows[j]);
  }

  const double feas_tol =
      options_.feasibility_tol *
      (1.0 + std::max(problem.num_eq() ? problem.b_eq.lpNorm<Eigen::Infinity>() : 0.0,
                      nin ? problem.b_in.lpNorm<Eigen::Infinity>() : 0.0));

  VectorXd x_eq, mult;
  k.point({}, x_eq, mult);
  if (problem.num_eq() > 0 && (problem.A_eq * x_eq - problem.b_eq).cwiseAbs().maxCoeff() > feas_tol) {
    sol.x = x_eq;
    sol.status = QpStatus::infeasible;
    return sol;
  }

  VectorXd x0;
  std::vector<int> w0;
  bool have_start = false;

  if (warm_start) {
    std::vector<int> cand;
    for (int i : *warm_start) {
      if (i >= 0 && i < nin && std::find(cand.begin(), cand.end(), i) == cand.end()) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end());
    cand = independent_subset(k, cand);
    VectorXd xw;
    k.point(cand, xw, mult);
    if (k.max_violation(xw) <= feas_tol) {
      x0 = xw;
      w0 = cand;
      have_start = true;
    }
  }

  if (!have_start && (nin == 0 || (k.A_in * x_eq - k.b_in).maxCoeff() <= feas_tol)) {
    x0 = x_eq;
    have_start = true;
  }

  if (!have_start) {
    // Phase 1: minimize 1/2 delta |x - x_eq|^2 + 1/2 t^2 + t subject to
    // A_eq x = b_eq, A_in x - t <= b_in, t >= 0, started at (x_eq, t0).
    constexpr double delta = 1e-6;
    Kernel aux;
    aux.P = MatrixXd::Zero(n + 1, n + 1);
    aux.P.topLeftCorner(n, n).diagonal().setConstant(delta);
    aux.P(n, n) = 1.0;
    aux.chol.compute(aux.P);
    aux.c = VectorXd::Zero(n + 1);
    aux.c.head(n) = -delta * x_eq;
    aux.c(n) = 1.0;
    aux.A_eq = MatrixXd::Zero(k.A_eq.rows(), n + 1);
    aux.A_eq.leftCols(n) = k.A_eq;
    aux.b_eq = k.b_eq;
    aux.A_in = MatrixXd::Zero(nin + 1, n + 1);
    aux.A_in.topLeftCorner(nin, n) = k.A_in;
    aux.A_in.col(n).setConstant(-1.0);
    aux.b_in = VectorXd::Zero(nin + 1);
    aux.b_in.head(nin) = k.b_in;
    VectorXd start(n + 1);
    start.head(n) = x_eq;
    start(n) = std::max(0.0, (k.A_in * x_eq - k.b_in).maxCoeff());
    const LoopResult ph1 = active_set_loop(aux, start, {}, max_iter, nullptr);
    sol.iterations += ph1.iterations;
    const VectorXd x1 = ph1.x.head(n);
    if (!ph1.converged || ph1.x(n) > feas_tol || k.max_violation(x1) > feas_tol) {
      sol.x = x1;
      sol.status = ph1.converged ? QpStatus::infeasible : QpStatus::max_iter;
      return sol;
    }
    std::vector<int> cand;
    for (int i : ph1.w) {
      if (i < nin) cand.push_back(i);
    }
    std::sort(cand.begin(), cand.end());
    x0 = x1;
    w0 = independent_subset(k, cand);
  }

  LoopResult ph2 = active_set_loop(k, x0, w0, max_iter, &sol.objective_trace);
  sol.iterations += ph2.iterations;

  // Recover multipliers in the caller's row numbering.
  const Index nw = k.A_eq.rows();
  for (std::size_t j = 0; j < eq_rows.size(); ++j) sol.y_eq(eq_rows[j]) = ph2.mult(static_cast<Index>(j));
  for (std::size_t j = 0; j < ph2.w.size(); ++j) sol.lambda_in(ph2.w[j]) = ph2.mult(nw + static_cast<Index>(j));
  sol.active_set = ph2.w;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.x = ph2.x;

  QpProblem solved = problem;
  solved.P = k.P;
  sol.kkt_residual = kkt_residual(solved, sol.x, sol.y_eq, sol.lambda_in);
  if (!ph2.converged) {
    sol.status = QpStatus::max_iter;
  } else if (sol.kkt_residual < options_.kkt_tol) {
    sol.status = QpStatus::optimal;
  } else {
    // Converged active set but the residual cannot be certified.
    sol.status = QpStatus::max_iter;
  }
  return sol;
}

namespace {

void write_block(std::ostream& os, const char* label, const MatrixXd& m) {
  os << label << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

void read_block(std::istream& is, const char* label, MatrixXd& m, Index rows, Index cols) {
  std::string tag;
  if (!(is >> tag) || tag != label) throw std::runtime_error(std::string("read_problem: expected block ") + label);
  m.resize(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw std::runtime_error(std::string("read_problem: truncated block ") + label);
}

}  // namespace

void write_problem(std::ostream& os, const QpProblem& pr) {
  pr.check_dimensions();
  const auto old = os.precision(17);
  os << "qp " << pr.num_vars() << ' ' << pr.num_eq() << ' ' << pr.num_in() << '\n';
  write_block(os, "P", pr.P);
  write_block(os, "c", pr.c.transpose());
  write_block(os, "A_eq", pr.A_eq);
  write_block(os, "b_eq", pr.b_eq.transpose());
  write_block(os, "A_in", pr.A_in);
  write_block(os, "b_in", pr.b_in.transpose());
  os.precision(old);
}

QpProblem read_problem(std::istream& is) {
  std::string magic;
  Index n = 0, me = 0, mi = 0;
  if (!(is >> magic >> n >> me >> mi) || magic != "qp" || n < 0 || me < 0 || mi < 0) {
    throw std::runtime_error("read_problem: bad header");
  }
  QpProblem pr;
  MatrixXd tmp;
  read_block(is, "P", pr.P, n, n);
  read_block(is, "c", tmp, 1, n);
  pr.c = tmp.transpose();
  read_block(is, "A_eq", pr.A_eq, me, n);
  read_block(is, "b_eq", tmp, 1, me);
  pr.b_eq = tmp.transpose();
  read_block(is, "A_in", pr.A_in, mi, n);
  read_block(is, "b_in", tmp, 1, mi);
  pr.b_in = tmp.transpose();
  return pr;
}

}  // namespace comanip
