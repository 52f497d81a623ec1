#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qp_chaser/planner.hpp"
#include "test_util.hpp"

using namespace qpchaser;
namespace tu = qpchaser::testutil;

namespace {

ReachableSetTrajectory moving_disk(const Vec2& from, const Vec2& to, double radius,
                                   double horizon) {
  Eigen::MatrixXd pts(2, 2);
  pts.row(0) = from.transpose();
  pts.row(1) = to.transpose();
  ReachableSetTrajectory r;
  r.center = PiecewiseBernstein::single(BernsteinSegment(0.0, horizon, pts));
  r.radius = PiecewiseBernstein::single(BernsteinSegment::constant_scalar(0.0, horizon, radius));
  r.body_radius = radius;
  return r;
}

PlannerParams default_params(double horizon = 1.5) {
  PlannerParams p;
  p.horizon = horizon;
  return p;
}

double quadrature_cost(const PiecewiseBernstein& traj,
                       const std::vector<BernsteinSegment>& reference, double w_j, double w_e) {
  const PiecewiseBernstein jerk = traj.derivative().derivative().derivative();
  double total = 0.0;
  for (size_t m = 0; m < reference.size(); ++m) {
    const auto& ref = reference[m];
    total += tu::quadrature(
        [&](double t) {
          const Eigen::VectorXd j = jerk.evaluate(t);
          const Eigen::VectorXd e = traj.evaluate(t) - ref.evaluate(t);
          return w_j * j.squaredNorm() + w_e * e.squaredNorm();
        },
        ref.start_time(), ref.end_time(), 2000);
  }
  return total;
}

}  // namespace

TEST_CASE("horizon segmentation at regime-switch roots") {
  // Target sliding from (0,0) to (3,0) over [0,3] with radius 0.5 against a
  // static disk at (2,0) with radius 0.5: the sets touch at t = 1 and stay
  // overlapped through t = 3.
  const double T = 3.0;
  std::vector<ReachableSetTrajectory> targets{moving_disk(Vec2(0, 0), Vec2(3, 0), 0.5, T)};
  std::vector<ReachableSetTrajectory> obstacles{
      ReachableSetTrajectory::static_disk(Vec2(2, 0), 0.5, T)};
  const auto seg = segment_horizon(targets, obstacles, T, 8, false);
  REQUIRE(seg.num_segments() == 2);
  CHECK(seg.knots[1] == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(seg.pairs.size() == 1);
  CHECK(seg.separated[0][0] == 1);
  CHECK(seg.separated[0][1] == 0);

  SUBCASE("no switch keeps a single segment") {
    std::vector<ReachableSetTrajectory> far{
        ReachableSetTrajectory::static_disk(Vec2(20, 0), 0.5, T)};
    const auto s = segment_horizon(targets, far, T, 8, false);
    CHECK(s.num_segments() == 1);
  }

  SUBCASE("regime flags match a direct midpoint distance comparison") {
    auto gen = tu::rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const Vec2 from(tu::uniform(gen, -3, 3), tu::uniform(gen, -3, 3));
      const Vec2 to(tu::uniform(gen, -3, 3), tu::uniform(gen, -3, 3));
      const Vec2 obst(tu::uniform(gen, -3, 3), tu::uniform(gen, -3, 3));
      std::vector<ReachableSetTrajectory> tg{moving_disk(from, to, 0.4, 1.5)};
      std::vector<ReachableSetTrajectory> ob{
          ReachableSetTrajectory::static_disk(obst, 0.6, 1.5)};
      const auto s = segment_horizon(tg, ob, 1.5, 8, false);
      for (int m = 0; m < s.num_segments(); ++m) {
        const double mid = 0.5 * (s.knots[m] + s.knots[m + 1]);
        const double gap = (tg[0].center_at(mid) - obst).norm() - (0.4 + 0.6);
        CHECK((s.separated[0][m] != 0) == (gap > 0.0));
      }
    }
  }

  SUBCASE("the knot cap merges the closest knots") {
    // A fast straight pass over a row of obstacles yields 7 interior roots.
    std::vector<ReachableSetTrajectory> tg{moving_disk(Vec2(0, 0), Vec2(12, 0), 0.5, T)};
    std::vector<ReachableSetTrajectory> row;
    for (double x : {2.0, 5.0, 8.0, 11.0}) {
      row.push_back(ReachableSetTrajectory::static_disk(Vec2(x, 0), 0.5, T));
    }
    const auto uncapped = segment_horizon(tg, row, T, 8, false);
    CHECK(uncapped.num_segments() >= 6);
    const auto s = segment_horizon(tg, row, T, 3, false);
    CHECK(s.num_segments() <= 3);
    CHECK(s.knots_merged);
  }
}

TEST_CASE("dual mode adds the target pair to the segmentation") {
  const double T = 1.5;
  std::vector<ReachableSetTrajectory> targets{moving_disk(Vec2(0, 0), Vec2(1.5, 0), 0.4, T),
                                              moving_disk(Vec2(3, 0), Vec2(1.5, 0), 0.4, T)};
  const auto seg = segment_horizon(targets, {}, T, 8, true);
  REQUIRE(seg.pairs.size() == 2);
  CHECK(seg.pairs[0].obstacle_is_target);
  // Head-on at 1 m/s each: the gap 3 - 2t - 0.8 hits zero at t = 1.1.
  REQUIRE(seg.num_segments() == 2);
  CHECK(seg.knots[1] == doctest::Approx(1.1).epsilon(1e-6));
}

TEST_CASE("dynamic rows pin the initial state and bound the derivatives") {
  const double T = 1.5;
  PlanInput input;
  input.state.position = Vec2(4, 0);
  input.state.velocity = Vec2(0.5, -0.25);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(0.5, 0), 0.3, T));
  PlannerParams params = default_params(T);
  const auto seg = segment_horizon(input.targets, input.obstacles, T, 8, false);
  const auto problem = assemble_problem(input, params, seg);

  SUBCASE("initial equalities hold for any trajectory written from the state") {
    const int nc1 = params.traj_degree + 1;
    Eigen::MatrixXd pts(nc1, 2);
    for (int j = 0; j < nc1; ++j) {
      pts.row(j) =
          (input.state.position + input.state.velocity * (T * j / params.traj_degree))
              .transpose();
    }
    const auto traj = PiecewiseBernstein::single(BernsteinSegment(0.0, T, pts));
    const Eigen::VectorXd z = pack_decision(traj);
    const Eigen::VectorXd eq_resid = problem.qp.a_eq * z - problem.qp.b_eq;
    CHECK(eq_resid.cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("a straight line passes the velocity boxes iff per-axis speed fits") {
    const int nc1 = params.traj_degree + 1;
    auto line_decision = [&](double speed) {
      Eigen::MatrixXd pts(nc1, 2);
      for (int j = 0; j < nc1; ++j) {
        pts.row(j) = Vec2(speed * T * j / params.traj_degree, 0.0).transpose();
      }
      return pack_decision(PiecewiseBernstein::single(BernsteinSegment(0.0, T, pts)));
    };
    auto dynamic_ok = [&](const Eigen::VectorXd& z) {
      const Eigen::VectorXd slack = problem.qp.a_ineq * z - problem.qp.b_ineq;
      for (int i = 0; i < slack.size(); ++i) {
        if (problem.ineq_classes[i] == RowClass::Dynamic && slack(i) < -1e-12) return false;
      }
      return true;
    };
    const double box = params.v_max / std::sqrt(2.0);
    CHECK(dynamic_ok(line_decision(box - 1e-6)));
    CHECK_FALSE(dynamic_ok(line_decision(box + 1e-3)));
  }
}

TEST_CASE("assembled cost equals the quadrature of the stated integrand") {
  const double T = 1.5;
  PlanInput input;
  input.state.position = Vec2(3, 1);
  input.state.velocity = Vec2(0.2, 0.0);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(1, 0.5), 0.3, T));
  input.obstacles.push_back(ReachableSetTrajectory::static_disk(Vec2(1.5, -2.0), 0.5, T));
  PlannerParams params = default_params(T);
  const auto seg = segment_horizon(input.targets, input.obstacles, T, 8, false);
  const auto problem = assemble_problem(input, params, seg);

  auto gen = tu::rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd z = Eigen::VectorXd::NullaryExpr(
        problem.decision_dim(), [&] { return tu::uniform(gen, -3, 3); });
    const auto traj = unpack_decision(z, problem.knots, params.traj_degree);
    // Constant term of the tracking cost: w_e * int ||ref||^2.
    double constant = 0.0;
    for (const auto& ref : problem.reference) {
      const Eigen::MatrixXd track = track_gram(params.traj_degree, ref.duration());
      for (int axis = 0; axis < 2; ++axis) {
        const Eigen::VectorXd rc = ref.control_points().col(axis);
        constant += params.track_weight * rc.dot(track * rc);
      }
    }
    const double by_matrix =
        0.5 * z.dot(problem.qp.hessian * z) + problem.qp.gradient.dot(z) + constant;
    const double by_quadrature =
        quadrature_cost(traj, problem.reference, params.jerk_weight, params.track_weight);
    CHECK(by_matrix == doctest::Approx(by_quadrature).epsilon(1e-7));
  }
}

TEST_CASE("with zero jerk weight the unconstrained minimizer matches the reference") {
  const double T = 1.5;
  PlanInput input;
  input.state.position = Vec2(4, 0);
  input.state.velocity = Vec2(0, 0);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(0, 0), 0.3, T));
  PlannerParams params = default_params(T);
  params.jerk_weight = 0.0;
  const auto seg = segment_horizon(input.targets, input.obstacles, T, 8, false);
  const auto problem = assemble_problem(input, params, seg);
  const Eigen::VectorXd z = problem.qp.hessian.ldlt().solve(-problem.qp.gradient);
  REQUIRE(problem.reference.size() == 1);
  const Eigen::VectorXd expect =
      pack_decision(PiecewiseBernstein::single(problem.reference[0]));
  CHECK((z - expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("reference blend starts at the drone and tracks the standoff") {
  const double T = 1.5;
  PlanInput input;
  input.state.position = Vec2(4, 0);
  input.state.velocity = Vec2(0, 0);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(0, 0), 0.3, T));
  PlannerParams params = default_params(T);
  const auto seg = segment_horizon(input.targets, input.obstacles, T, 8, false);
  const auto problem = assemble_problem(input, params, seg);
  REQUIRE(problem.reference.size() == 1);
  // alpha(0) = 0: the reference starts exactly at the drone.
  CHECK((problem.reference[0].evaluate(0.0) - input.state.position).norm() < 1e-9);
  // Static target with the drone already on the standoff ring: stays put.
  CHECK((problem.reference[0].evaluate(T) - Vec2(4, 0)).norm() < 1e-9);
}

TEST_CASE("plan holds station in open space") {
  const double T = 1.5;
  PlanInput input;
  input.state.position = Vec2(4, 0);
  input.state.velocity = Vec2(0, 0);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(0, 0), 0.3, T));
  PlannerParams params = default_params(T);
  const auto result = plan(input, params);
  REQUIRE(result.status == PlanStatus::Optimal);
  for (int i = 0; i <= 100; ++i) {
    const double t = T * i / 100.0;
    CHECK((result.trajectory.evaluate(t) - Vec2(4, 0)).norm() < 0.1);
  }
  CHECK(result.diagnostics.min_constraint_margin >= -1e-6);
  CHECK((result.trajectory.evaluate(0.0) - input.state.position).norm() < 1e-9);

  SUBCASE("identical inputs produce identical plans") {
    const auto again = plan(input, params);
    REQUIRE(again.status == result.status);
    for (int m = 0; m < result.trajectory.num_segments(); ++m) {
      CHECK(result.trajectory.segment(m).control_points() ==
            again.trajectory.segment(m).control_points());
    }
  }
}

TEST_CASE("planner feasibility audit on randomized solvable scenes") {
  auto gen = tu::rng(77);
  int optimal = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const double T = 1.5;
    PlanInput input;
    const Vec2 q0(tu::uniform(gen, -1, 1), tu::uniform(gen, -1, 1));
    const Vec2 q1 = q0 + Vec2(tu::uniform(gen, -0.8, 0.8), tu::uniform(gen, -0.8, 0.8));
    input.targets.push_back(moving_disk(q0, q1, 0.3, T));
    const double bearing = tu::uniform(gen, 0.0, 2.0 * M_PI);
    input.state.position = q0 + 4.0 * Vec2(std::cos(bearing), std::sin(bearing));
    input.state.velocity = Vec2(tu::uniform(gen, -0.5, 0.5), tu::uniform(gen, -0.5, 0.5));
    const Vec2 away = q0 - 3.0 * Vec2(std::cos(bearing), std::sin(bearing));
    input.obstacles.push_back(ReachableSetTrajectory::static_disk(
        away + Vec2(tu::uniform(gen, -0.5, 0.5), tu::uniform(gen, -0.5, 0.5)), 0.5, T));

    PlannerParams params = default_params(T);
    const auto result = plan(input, params);
    if (result.status != PlanStatus::Optimal) continue;
    ++optimal;
    CHECK(result.diagnostics.min_constraint_margin >= -1e-6);
    CHECK(result.diagnostics.max_speed <= params.v_max + 1e-6);
    CHECK(result.diagnostics.max_accel <= params.a_max + 1e-6);
    CHECK(result.trajectory.continuity_gap(0) < 1e-9);
    CHECK(result.trajectory.continuity_gap(1) < 1e-8);
    CHECK(result.trajectory.continuity_gap(2) < 1e-8);
    CHECK((result.trajectory.evaluate(0.0) - input.state.position).norm() < 1e-9);
    const Vec2 v0 = result.trajectory.derivative().evaluate(0.0);
    CHECK((v0 - input.state.velocity).norm() < 1e-9);
  }
  CHECK(optimal >= 20);
}

TEST_CASE("slack retry relaxes only visibility rows") {
  const double T = 1.5;
  PlanInput input;
  // Drone starts occluded: target behind an obstacle straddling the sight line.
  input.state.position = Vec2(4, 0);
  input.state.velocity = Vec2(0, 0);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(0, 0), 0.2, T));
  input.obstacles.push_back(ReachableSetTrajectory::static_disk(Vec2(2.0, 0.0), 0.8, T));
  PlannerParams params = default_params(T);

  const auto seg = segment_horizon(input.targets, input.obstacles, T, 8, false);
  const auto base = assemble_problem(input, params, seg);
  const auto relaxed = relax_visibility_rows(base, params.slack_weight);

  const int base_dim = base.decision_dim();
  const int extra = static_cast<int>(relaxed.qp.hessian.rows()) - base_dim;
  CHECK(extra > 0);
  for (int i = 0; i < base.qp.a_ineq.rows(); ++i) {
    const double slack_coupling = relaxed.qp.a_ineq.row(i).tail(extra).cwiseAbs().sum();
    const RowClass cls = relaxed.ineq_classes[i];
    if (cls == RowClass::Dynamic || cls == RowClass::Collision) {
      CHECK(slack_coupling == 0.0);  // hard rows stay hard
    }
  }

  const auto result = plan(input, params);
  // The occluded start makes the strict problem infeasible; the slack ladder
  // must still produce a usable trajectory from the exact initial state.
  CHECK(result.status == PlanStatus::FallbackRelaxed);
  CHECK((result.trajectory.evaluate(0.0) - input.state.position).norm() < 1e-9);
  CHECK(result.diagnostics.used_slack);
}

TEST_CASE("fallback ladder ends in the braking trajectory") {
  const double T = 1.5;
  PlanInput input;
  // Initial position deep inside an obstacle's inflated set: collision rows
  // conflict with the pinned start and slack may not touch them.
  input.state.position = Vec2(0.8, 0.0);
  input.state.velocity = Vec2(2.0, 0.0);
  input.targets.push_back(moving_disk(Vec2(5, 5), Vec2(5, 5), 0.2, T));
  input.obstacles.push_back(ReachableSetTrajectory::static_disk(Vec2(0, 0), 1.0, T));

  PlannerParams params = default_params(T);
  const auto result = plan(input, params);
  REQUIRE(result.status == PlanStatus::FallbackStop);
  CHECK((result.trajectory.evaluate(0.0) - input.state.position).norm() < 1e-12);
  const auto vel = result.trajectory.derivative();
  CHECK((Vec2(vel.evaluate(0.0)) - Vec2(2.0, 0.0)).norm() < 1e-12);
  // Braking at a_max reaches rest at t = 0.4 and holds.
  CHECK(vel.evaluate(T).norm() < 1e-9);
  CHECK(result.diagnostics.max_accel <= params.a_max + 1e-9);

  SUBCASE("with a previous plan the planner reuses it instead") {
    PlanInput with_prev = input;
    Eigen::MatrixXd pts(2, 2);
    pts << 0.8, 0.0, 1.4, 0.0;
    with_prev.previous_plan = PiecewiseBernstein::single(BernsteinSegment(0.0, T, pts));
    const auto reused = plan(with_prev, params);
    CHECK(reused.status == PlanStatus::FallbackPrevious);
    CHECK((reused.trajectory.evaluate(0.0) - Vec2(0.8, 0.0)).norm() < 1e-9);
    CHECK((reused.trajectory.evaluate(T) - Vec2(1.4, 0.0)).norm() < 1e-6);
  }
}

TEST_CASE("dual-target plan keeps both topology families in the problem") {
  const double T = 1.5;
  PlanInput input;
  input.state.position = Vec2(1.0, -4.0);
  input.state.velocity = Vec2(0, 0);
  input.targets.push_back(moving_disk(Vec2(0, 0), Vec2(0.3, 0), 0.25, T));
  input.targets.push_back(moving_disk(Vec2(2, 0), Vec2(2.3, 0), 0.25, T));
  input.obstacles.push_back(ReachableSetTrajectory::static_disk(Vec2(-3.0, -3.0), 0.5, T));
  PlannerParams params = default_params(T);

  const auto seg = segment_horizon(input.targets, input.obstacles, T, 8, true);
  const auto problem = assemble_problem(input, params, seg);
  bool has_tvrf = false;
  bool has_target_pair = false;
  for (const auto& hs : problem.series) {
    has_tvrf = has_tvrf || hs.kind == ConstraintKind::TvrF;
  }
  for (const auto& key : seg.pairs) has_target_pair = has_target_pair || key.obstacle_is_target;
  CHECK(has_tvrf);
  CHECK(has_target_pair);

  const auto result = plan(input, params);
  REQUIRE(result.status == PlanStatus::Optimal);
  // Both targets stay inside the FOV cone along the plan.
  for (int i = 0; i <= 50; ++i) {
    const double t = T * i / 50.0;
    const Vec2 c = result.trajectory.evaluate(t);
    const Vec2 u1 = (Vec2(input.targets[0].center_at(t)) - c).normalized();
    const Vec2 u2 = (Vec2(input.targets[1].center_at(t)) - c).normalized();
    const double angle = std::acos(std::clamp(u1.dot(u2), -1.0, 1.0));
    CHECK(angle <= params.fov + 1e-6);
  }
}

TEST_CASE("decision packing round trip") {
  auto gen = tu::rng(15);
  const std::vector<double> knots{0.0, 0.6, 1.5};
  const Eigen::VectorXd z =
      Eigen::VectorXd::NullaryExpr(2 * 7 * 2, [&] { return tu::uniform(gen, -5, 5); });
  const auto traj = unpack_decision(z, knots, 6);
  CHECK(traj.num_segments() == 2);
  CHECK((pack_decision(traj) - z).cwiseAbs().maxCoeff() == 0.0);
}
