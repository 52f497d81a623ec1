#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>

#include "qp_chaser/qp_solver.hpp"
#include "test_util.hpp"

using namespace qpchaser;
namespace tu = qpchaser::testutil;

namespace {

QpProblem make_qp(const Eigen::MatrixXd& h, const Eigen::VectorXd& g, const Eigen::MatrixXd& a,
                  const Eigen::VectorXd& b) {
  QpProblem qp;
  qp.hessian = h;
  qp.gradient = g;
  qp.a_ineq = a;
  qp.b_ineq = b;
  qp.a_eq.resize(0, h.rows());
  qp.b_eq.resize(0);
  return qp;
}

double objective(const QpProblem& qp, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(qp.hessian * x) + qp.gradient.dot(x);
}

/// Brute-force oracle: enumerate every subset of inequality rows as the
/// candidate active set, solve the equality-constrained QP, keep the best
/// feasible candidate.
std::optional<double> brute_force_objective(const QpProblem& qp) {
  const int n = qp.num_vars();
  const int m = static_cast<int>(qp.a_ineq.rows());
  std::optional<double> best;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (mask & (1 << i)) active.push_back(i);
    }
    const int k = static_cast<int>(active.size()) + static_cast<int>(qp.a_eq.rows());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
    kkt.topLeftCorner(n, n) = qp.hessian;
    rhs.head(n) = -qp.gradient;
    int row = 0;
    for (int i : active) {
      kkt.block(n + row, 0, 1, n) = qp.a_ineq.row(i);
      kkt.block(0, n + row, n, 1) = qp.a_ineq.row(i).transpose();
      rhs(n + row) = qp.b_ineq(i);
      ++row;
    }
    for (int i = 0; i < qp.a_eq.rows(); ++i) {
      kkt.block(n + row, 0, 1, n) = qp.a_eq.row(i);
      kkt.block(0, n + row, n, 1) = qp.a_eq.row(i).transpose();
      rhs(n + row) = qp.b_eq(i);
      ++row;
    }
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    // The subset system must actually hold (degenerate subsets are skipped).
    bool ok = (kkt * sol - rhs).cwiseAbs().maxCoeff() < 1e-7;
    if (ok && m > 0) ok = ((qp.a_ineq * x - qp.b_ineq).array() >= -1e-8).all();
    if (ok && qp.a_eq.rows() > 0) ok = (qp.a_eq * x - qp.b_eq).cwiseAbs().maxCoeff() < 1e-8;
    if (!ok) continue;
    const double obj = objective(qp, x);
    if (!best || obj < *best) best = obj;
  }
  return best;
}

}  // namespace

TEST_CASE("scalar bound") {
  Eigen::MatrixXd h(1, 1);
  h << 2.0;
  Eigen::MatrixXd a(1, 1);
  a << 1.0;
  const auto sol = solve_qp(make_qp(h, Eigen::VectorXd::Zero(1), a, Eigen::VectorXd::Ones(1)));
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.ineq_duals(0) >= 0.0);
  CHECK(sol.kkt_residual < 1e-8);
}

TEST_CASE("symmetric halfspace projection") {
  const Eigen::MatrixXd h = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd a(1, 2);
  a << 1.0, 1.0;
  Eigen::VectorXd b(1);
  b << 2.0;
  const auto sol = solve_qp(make_qp(h, Eigen::VectorXd::Zero(2), a, b));
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.x(1) == doctest::Approx(1.0));
}

TEST_CASE("contradictory bounds are infeasible") {
  const Eigen::MatrixXd h = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  Eigen::MatrixXd a(2, 1);
  a << 1.0, -1.0;
  Eigen::VectorXd b(2);
  b << 1.0, 0.0;  // x >= 1 and -x >= 0
  const auto sol = solve_qp(make_qp(h, Eigen::VectorXd::Zero(1), a, b));
  CHECK(sol.status == QpStatus::Infeasible);
}

TEST_CASE("equality elimination") {
  // min (x-3)^2 + y^2 s.t. x + y = 1, y >= 0.4
  Eigen::MatrixXd h = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd g(2);
  g << -6.0, 0.0;
  QpProblem qp;
  qp.hessian = h;
  qp.gradient = g;
  qp.a_eq.resize(1, 2);
  qp.a_eq << 1.0, 1.0;
  qp.b_eq.resize(1);
  qp.b_eq << 1.0;
  qp.a_ineq.resize(1, 2);
  qp.a_ineq << 0.0, 1.0;
  qp.b_ineq.resize(1);
  qp.b_ineq << 0.4;
  const auto sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) + sol.x(1) == doctest::Approx(1.0));
  CHECK(sol.x(1) == doctest::Approx(0.4));  // unconstrained optimum has y < 0.4, bound binds
  CHECK(sol.kkt_residual < 1e-8);

  SUBCASE("inconsistent equalities are infeasible") {
    qp.a_eq.resize(2, 2);
    qp.a_eq << 1.0, 1.0, 1.0, 1.0;
    qp.b_eq.resize(2);
    qp.b_eq << 1.0, 2.0;
    CHECK(solve_qp(qp).status == QpStatus::Infeasible);
  }
}

TEST_CASE("duplicate and vacuous rows") {
  const Eigen::MatrixXd h = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd a(4, 2);
  a << 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0;  // three copies plus a zero row
  Eigen::VectorXd b(4);
  b << 1.0, 1.0, 1.0, -1.0;
  const auto sol = solve_qp(make_qp(h, Eigen::VectorXd::Zero(2), a, b));
  REQUIRE(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0));

  SUBCASE("zero row with positive rhs is infeasible") {
    b(3) = 0.5;
    CHECK(solve_qp(make_qp(h, Eigen::VectorXd::Zero(2), a, b)).status == QpStatus::Infeasible);
  }
}

TEST_CASE("deterministic for identical inputs") {
  auto gen = tu::rng(2024);
  Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return tu::uniform(gen, -1, 1); });
  const Eigen::MatrixXd h = m.transpose() * m + 0.5 * Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd g =
      Eigen::VectorXd::NullaryExpr(4, [&] { return tu::uniform(gen, -2, 2); });
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::NullaryExpr(6, 4, [&] { return tu::uniform(gen, -1, 1); });
  const Eigen::VectorXd b =
      Eigen::VectorXd::NullaryExpr(6, [&] { return tu::uniform(gen, -1, 0.5); });
  const auto s1 = solve_qp(make_qp(h, g, a, b));
  const auto s2 = solve_qp(make_qp(h, g, a, b));
  REQUIRE(s1.status == s2.status);
  if (s1.status == QpStatus::Optimal) {
    CHECK((s1.x - s2.x).norm() == 0.0);
    CHECK(s1.iterations == s2.iterations);
  }
}

TEST_CASE("random tiny QPs match brute-force active-set enumeration") {
  auto gen = tu::rng(555);
  int optimal_cases = 0;
  int infeasible_cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(tu::uniform(gen, 0.0, 4.99));  // 2..6 vars
    const int m = 1 + static_cast<int>(tu::uniform(gen, 0.0, 7.99));  // 1..8 rows
    Eigen::MatrixXd base =
        Eigen::MatrixXd::NullaryExpr(n, n, [&] { return tu::uniform(gen, -1, 1); });
    QpProblem qp = make_qp(
        base.transpose() * base + 0.2 * Eigen::MatrixXd::Identity(n, n),
        Eigen::VectorXd::NullaryExpr(n, [&] { return tu::uniform(gen, -2, 2); }),
        Eigen::MatrixXd::NullaryExpr(m, n, [&] { return tu::uniform(gen, -1, 1); }),
        Eigen::VectorXd::NullaryExpr(m, [&] { return tu::uniform(gen, -1.5, 1.0); }));

    const auto sol = solve_qp(qp);
    const auto brute = brute_force_objective(qp);
    if (sol.status == QpStatus::Optimal) {
      ++optimal_cases;
      REQUIRE_MESSAGE(brute.has_value(), "solver found optimum where oracle found none");
      CHECK(objective(qp, sol.x) == doctest::Approx(*brute).epsilon(1e-6));
      CHECK(sol.kkt_residual <= 1e-6);
      CHECK(sol.max_violation >= -1e-9);
      CHECK((sol.ineq_duals.array() >= -1e-9).all());
    } else {
      ++infeasible_cases;
      CHECK_FALSE(brute.has_value());
    }
  }
  // The mix should exercise both outcomes.
  CHECK(optimal_cases > 50);
  CHECK(infeasible_cases > 5);
}

TEST_CASE("KKT certificate components") {
  auto gen = tu::rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3;
    Eigen::MatrixXd base =
        Eigen::MatrixXd::NullaryExpr(n, n, [&] { return tu::uniform(gen, -1, 1); });
    QpProblem qp = make_qp(
        base.transpose() * base + 0.3 * Eigen::MatrixXd::Identity(n, n),
        Eigen::VectorXd::NullaryExpr(n, [&] { return tu::uniform(gen, -1, 1); }),
        Eigen::MatrixXd::NullaryExpr(4, n, [&] { return tu::uniform(gen, -1, 1); }),
        Eigen::VectorXd::NullaryExpr(4, [&] { return tu::uniform(gen, -1.0, 0.3); }));
    const auto sol = solve_qp(qp);
    if (sol.status != QpStatus::Optimal) continue;
    const Eigen::VectorXd stat =
        qp.hessian * sol.x + qp.gradient - qp.a_ineq.transpose() * sol.ineq_duals;
    CHECK(stat.cwiseAbs().maxCoeff() < 1e-6);
    const Eigen::VectorXd slack = qp.a_ineq * sol.x - qp.b_ineq;
    CHECK(slack.minCoeff() > -1e-9);
    CHECK(slack.cwiseProduct(sol.ineq_duals).cwiseAbs().maxCoeff() < 1e-6);
  }
}
