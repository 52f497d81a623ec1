#include "qp_chaser/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qpchaser {

namespace {

constexpr double kFeasTol = 1e-10;
constexpr double kDirTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ReducedQp {
  Eigen::MatrixXd g_mat;  // reduced Hessian
  Eigen::VectorXd a_vec;  // reduced gradient
  Eigen::MatrixXd c_rows; // inequality rows (normalized)
  Eigen::VectorXd d_vec;
  std::vector<double> row_scale;       // original row norms
  std::vector<int> row_map;            // reduced row -> original row
};

/// Goldfarb–Idnani dual active-set iteration on the reduced problem.
/// Returns status; fills y, duals (per reduced row), iteration count.
QpStatus dual_active_set(const ReducedQp& rq, int max_iter, Eigen::VectorXd* y_out,
                         Eigen::VectorXd* duals_out, int* iters_out) {
  const int n = static_cast<int>(rq.g_mat.rows());
  const int m = static_cast<int>(rq.c_rows.rows());

  Eigen::LLT<Eigen::MatrixXd> chol;
  if (n > 0) {
    chol.compute(rq.g_mat);
    if (chol.info() != Eigen::Success)
      throw std::invalid_argument("solve_qp: Hessian not positive definite on the feasible subspace");
  }

  // One step of iterative refinement keeps solves trustworthy when short
  // segments stretch the Hessian conditioning.
  auto solve_ref = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd v = chol.solve(rhs);
    v += chol.solve(rhs - rq.g_mat * v);
    return v;
  };

  Eigen::VectorXd y = n > 0 ? Eigen::VectorXd(-solve_ref(rq.a_vec)) : Eigen::VectorXd(0);
  std::vector<int> active;
  std::vector<double> u;
  Eigen::VectorXd duals = Eigen::VectorXd::Zero(m);
  int iterations = 0;

  while (true) {
    // Most violated inactive constraint.
    int p = -1;
    double worst = -kFeasTol;
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = rq.c_rows.row(i).dot(y) - rq.d_vec(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      duals.setZero();
      for (size_t k = 0; k < active.size(); ++k) duals(active[k]) = u[k];
      *y_out = y;
      *duals_out = duals;
      *iters_out = iterations;
      return QpStatus::Optimal;
    }

    const Eigen::VectorXd np = rq.c_rows.row(p).transpose();
    double up = 0.0;

    while (true) {
      if (++iterations > max_iter) return QpStatus::Stalled;

      const int k = static_cast<int>(active.size());
      Eigen::VectorXd z;
      Eigen::VectorXd r;
      if (n == 0) {
        z = Eigen::VectorXd(0);
        r = Eigen::VectorXd::Zero(k);
      } else if (k == 0) {
        z = solve_ref(np);
        r = Eigen::VectorXd(0);
      } else {
        Eigen::MatrixXd n_act(k, n);
        for (int j = 0; j < k; ++j) n_act.row(j) = rq.c_rows.row(active[j]);
        Eigen::MatrixXd ginv_nt = chol.solve(n_act.transpose());
        ginv_nt += chol.solve(n_act.transpose() - rq.g_mat * ginv_nt);
        const Eigen::VectorXd ginv_np = solve_ref(np);
        const Eigen::MatrixXd schur = n_act * ginv_nt;
        r = schur.ldlt().solve(n_act * ginv_np);
        z = ginv_np - ginv_nt * r;
      }

      const double ztn = n > 0 ? z.dot(np) : 0.0;

      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < k; ++j) {
        if (r(j) > kDirTol) {
          const double cand = u[j] / r(j);
          if (cand < t1) {
            t1 = cand;
            drop = j;
          }
        }
      }

      const double sp = rq.c_rows.row(p).dot(y) - rq.d_vec(p);
      const double t2 = (ztn > kDirTol) ? (-sp / ztn) : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) return QpStatus::Infeasible;

      if (t2 == kInf) {
        // Dual-only step: drop the blocking constraint and retry.
        for (int j = 0; j < k; ++j) u[j] -= t * r(j);
        up += t;
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
        continue;
      }

      y += t * z;
      for (int j = 0; j < k; ++j) u[j] -= t * r(j);
      up += t;

      if (t == t2) {
        active.push_back(p);
        u.push_back(up);
        break;  // back to violation scan
      }
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }
}

}  // namespace

double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& ineq_duals, const Eigen::VectorXd& eq_duals) {
  Eigen::VectorXd stat = qp.hessian * x + qp.gradient;
  if (qp.a_ineq.rows() > 0) stat -= qp.a_ineq.transpose() * ineq_duals;
  if (qp.a_eq.rows() > 0) stat -= qp.a_eq.transpose() * eq_duals;
  const double scale = std::max({1.0, (qp.hessian * x).cwiseAbs().maxCoeff(),
                                 qp.gradient.size() ? qp.gradient.cwiseAbs().maxCoeff() : 0.0});
  double res = stat.cwiseAbs().maxCoeff() / scale;

  if (qp.a_ineq.rows() > 0) {
    const Eigen::VectorXd slack = qp.a_ineq * x - qp.b_ineq;
    res = std::max(res, -std::min(0.0, slack.minCoeff()));
    res = std::max(res, -std::min(0.0, ineq_duals.minCoeff()));
    res = std::max(res, slack.cwiseProduct(ineq_duals).cwiseAbs().maxCoeff() / scale);
  }
  if (qp.a_eq.rows() > 0) {
    res = std::max(res, (qp.a_eq * x - qp.b_eq).cwiseAbs().maxCoeff());
  }
  return res;
}

QpSolution solve_qp(const QpProblem& qp) {
  const int n = qp.num_vars();
  const int m_ineq = static_cast<int>(qp.a_ineq.rows());
  const int m_eq = static_cast<int>(qp.a_eq.rows());

  QpSolution sol;

  // Jacobi equilibration: short trajectory segments put the jerk-Gram
  // diagonal many orders of magnitude above the tracking terms.
  Eigen::VectorXd col_scale(n);
  for (int i = 0; i < n; ++i) {
    col_scale(i) = 1.0 / std::sqrt(std::max(std::abs(qp.hessian(i, i)), 1e-12));
  }
  QpProblem work;
  work.hessian = col_scale.asDiagonal() * qp.hessian * col_scale.asDiagonal();
  work.gradient = col_scale.cwiseProduct(qp.gradient);
  work.a_ineq = qp.a_ineq * col_scale.asDiagonal();
  work.b_ineq = qp.b_ineq;
  work.a_eq = qp.a_eq * col_scale.asDiagonal();
  work.b_eq = qp.b_eq;

  // Equality elimination: x_hat = x_p + Z y.
  Eigen::VectorXd x_p = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd z_basis = Eigen::MatrixXd::Identity(n, n);
  if (m_eq > 0) {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(work.a_eq);
    x_p = cod.solve(work.b_eq);
    if ((work.a_eq * x_p - work.b_eq).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, work.b_eq.cwiseAbs().maxCoeff())) {
      sol.status = QpStatus::Infeasible;
      return sol;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(work.a_eq);
    const Eigen::MatrixXd kernel = lu.kernel();
    if (kernel.cols() == 0 || (kernel.cols() == 1 && kernel.norm() < 1e-14)) {
      z_basis.resize(n, 0);
    } else {
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
      z_basis = qr.householderQ() * Eigen::MatrixXd::Identity(n, kernel.cols());
    }
  }
  const int nr = static_cast<int>(z_basis.cols());

  ReducedQp rq;
  rq.g_mat = z_basis.transpose() * work.hessian * z_basis;
  rq.g_mat = 0.5 * (rq.g_mat + rq.g_mat.transpose()).eval();
  rq.a_vec = z_basis.transpose() * (work.hessian * x_p + work.gradient);

  // Normalize and map inequality rows; drop vacuous rows, detect trivially
  // infeasible ones.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < m_ineq; ++i) {
    const Eigen::VectorXd reduced = z_basis.transpose() * work.a_ineq.row(i).transpose();
    const double shift = work.b_ineq(i) - work.a_ineq.row(i).dot(x_p);
    const double norm = reduced.norm();
    if (norm < 1e-13) {
      if (shift > 1e-9 * std::max(1.0, work.a_ineq.row(i).norm())) {
        sol.status = QpStatus::Infeasible;
        return sol;
      }
      continue;
    }
    rows.push_back(reduced / norm);
    rhs.push_back(shift / norm);
    rq.row_scale.push_back(norm);
    rq.row_map.push_back(i);
  }
  rq.c_rows.resize(static_cast<int>(rows.size()), nr);
  rq.d_vec.resize(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    rq.c_rows.row(static_cast<int>(i)) = rows[i].transpose();
    rq.d_vec(static_cast<int>(i)) = rhs[i];
  }

  Eigen::VectorXd y, reduced_duals;
  int iters = 0;
  const int max_iter = 50 * (static_cast<int>(rows.size()) + 1);
  const QpStatus status = dual_active_set(rq, max_iter, &y, &reduced_duals, &iters);
  sol.iterations = iters;
  sol.status = status;
  if (status != QpStatus::Optimal) return sol;

  sol.x = col_scale.cwiseProduct(x_p + z_basis * y);

  std::vector<int> active_rows;
  for (size_t i = 0; i < rq.row_map.size(); ++i) {
    const int row = rq.row_map[i];
    const double norm = std::max(1.0, qp.a_ineq.row(row).norm());
    const double slack = (qp.a_ineq.row(row).dot(sol.x) - qp.b_ineq(row)) / norm;
    if (reduced_duals(static_cast<int>(i)) > 0.0 || slack < 1e-7) active_rows.push_back(row);
  }

  // Polish the primal on the final active set: one saddle-point solve removes
  // the accumulated roundoff of the iteration.
  {
    const int n_act = static_cast<int>(active_rows.size());
    Eigen::MatrixXd m_act(n_act + m_eq, n);
    Eigen::VectorXd m_rhs(n_act + m_eq);
    for (int i = 0; i < n_act; ++i) {
      m_act.row(i) = qp.a_ineq.row(active_rows[i]);
      m_rhs(i) = qp.b_ineq(active_rows[i]);
    }
    if (m_eq > 0) {
      m_act.bottomRows(m_eq) = qp.a_eq;
      m_rhs.tail(m_eq) = qp.b_eq;
    }
    const int rows_kkt = n_act + m_eq;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + rows_kkt, n + rows_kkt);
    kkt.topLeftCorner(n, n) = qp.hessian;
    if (rows_kkt > 0) {
      kkt.topRightCorner(n, rows_kkt) = m_act.transpose();
      kkt.bottomLeftCorner(rows_kkt, n) = m_act;
    }
    Eigen::VectorXd rhs(n + rows_kkt);
    rhs.head(n) = -qp.gradient;
    rhs.tail(rows_kkt) = m_rhs;
    const Eigen::VectorXd polished =
        kkt.completeOrthogonalDecomposition().solve(rhs).head(n);
    // Accept only if it stays feasible and still solves the active system.
    bool ok = polished.allFinite();
    if (ok && rows_kkt > 0) ok = (m_act * polished - m_rhs).cwiseAbs().maxCoeff() < 1e-8;
    if (ok && m_ineq > 0) {
      ok = ((qp.a_ineq * polished - qp.b_ineq).array() >= -1e-10).all();
    }
    if (ok && (polished - sol.x).norm() < 1e-4 * (1.0 + sol.x.norm())) sol.x = polished;
  }
  // Sign-constrained refit: drop rows whose least-squares multiplier comes
  // out negative (dependent normals) and re-solve until the remaining duals
  // are admissible.
  sol.ineq_duals = Eigen::VectorXd::Zero(m_ineq);
  sol.eq_duals = Eigen::VectorXd::Zero(m_eq);
  const Eigen::VectorXd grad_at_x = qp.hessian * sol.x + qp.gradient;
  for (int pass = 0; pass <= static_cast<int>(active_rows.size()); ++pass) {
    const int n_act = static_cast<int>(active_rows.size());
    if (n_act + m_eq == 0) break;
    Eigen::MatrixXd normals(n, n_act + m_eq);
    for (int i = 0; i < n_act; ++i) normals.col(i) = qp.a_ineq.row(active_rows[i]).transpose();
    if (m_eq > 0) normals.rightCols(m_eq) = qp.a_eq.transpose();
    const Eigen::VectorXd duals = normals.completeOrthogonalDecomposition().solve(grad_at_x);
    int worst = -1;
    double most_negative = -1e-12;
    for (int i = 0; i < n_act; ++i) {
      if (duals(i) < most_negative) {
        most_negative = duals(i);
        worst = i;
      }
    }
    if (worst < 0) {
      for (int i = 0; i < n_act; ++i) sol.ineq_duals(active_rows[i]) = std::max(0.0, duals(i));
      if (m_eq > 0) sol.eq_duals = duals.tail(m_eq);
      break;
    }
    active_rows.erase(active_rows.begin() + worst);
  }

  sol.kkt_residual = kkt_residual(qp, sol.x, sol.ineq_duals, sol.eq_duals);
  if (m_ineq > 0) {
    sol.max_violation = std::min(0.0, (qp.a_ineq * sol.x - qp.b_ineq).minCoeff());
  }
  if (sol.kkt_residual > 1e-8 || sol.max_violation < -1e-9) {
    sol.status = QpStatus::Stalled;  // certificate failed; do not report optimal
  }
  return sol;
}

}  // namespace qpchaser
