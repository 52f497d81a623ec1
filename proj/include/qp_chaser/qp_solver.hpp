#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qpchaser {

/// Dense convex QP:  min 1/2 x^T H x + g^T x
///                   s.t. A_ineq x >= b_ineq,  A_eq x = b_eq
/// H must be positive definite on the null space of A_eq.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;

  int num_vars() const { return static_cast<int>(hessian.rows()); }
};

enum class QpStatus { Optimal, Infeasible, Stalled };

struct QpSolution {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd ineq_duals;  // >= 0, one per inequality row
  Eigen::VectorXd eq_duals;
  int iterations = 0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;  // most negative inequality slack (0 when feasible)
};

/// Dual active-set solve (Goldfarb–Idnani) after nullspace elimination of the
/// equality rows. Deterministic for a fixed row order; reports Optimal only
/// when the KKT certificate passes (stationarity <= 1e-8 scaled, primal
/// feasibility >= -1e-9).
QpSolution solve_qp(const QpProblem& qp);

/// Scaled KKT residual of a candidate primal/dual triple: max of
/// stationarity, primal/dual infeasibility, and complementary slackness.
double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& ineq_duals, const Eigen::VectorXd& eq_duals);

}  // namespace qpchaser
