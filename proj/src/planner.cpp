#include "qp_chaser/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qpchaser {

namespace {

constexpr double kKnotMergeTol = 1e-6;

/// d1^2(t) - (r_a(t) + r_b(t))^2 between two reachable sets, as one scalar
/// segment on [0, horizon].
BernsteinSegment separation_poly(const ReachableSetTrajectory& a, const ReachableSetTrajectory& b,
                                 double horizon) {
  const BernsteinSegment ca = a.center.restricted(0.0, horizon);
  const BernsteinSegment cb = b.center.restricted(0.0, horizon);
  const int deg = std::max(ca.degree(), cb.degree());
  const Eigen::MatrixXd pa = ca.elevated(deg).control_points();
  const Eigen::MatrixXd pb = cb.elevated(deg).control_points();
  const BernsteinSegment dx(0.0, horizon, pa.col(0) - pb.col(0));
  const BernsteinSegment dy(0.0, horizon, pa.col(1) - pb.col(1));

  const BernsteinSegment ra = a.radius.restricted(0.0, horizon);
  const BernsteinSegment rb = b.radius.restricted(0.0, horizon);
  const int rdeg = std::max(ra.degree(), rb.degree());
  const BernsteinSegment rsum(0.0, horizon,
                              ra.elevated(rdeg).control_points().col(0) +
                                  rb.elevated(rdeg).control_points().col(0));

  const BernsteinSegment d2 =
      BernsteinSegment(0.0, horizon, multiply(dx, dx).control_points().col(0) +
                                         multiply(dy, dy).control_points().col(0));
  const BernsteinSegment r2 = multiply(rsum, rsum);
  const int out = std::max(d2.degree(), r2.degree());
  return BernsteinSegment(0.0, horizon, d2.elevated(out).control_points().col(0) -
                                            r2.elevated(out).control_points().col(0));
}

const ReachableSetTrajectory& pair_obstacle(const PairKey& key,
                                            const std::vector<ReachableSetTrajectory>& targets,
                                            const std::vector<ReachableSetTrajectory>& obstacles) {
  return key.obstacle_is_target ? targets[key.obstacle] : obstacles[key.obstacle];
}

}  // namespace

SegmentationResult segment_horizon(const std::vector<ReachableSetTrajectory>& targets,
                                   const std::vector<ReachableSetTrajectory>& obstacles,
                                   double horizon, int max_segments, bool dual_mode) {
  SegmentationResult out;
  for (int k = 0; k < static_cast<int>(targets.size()); ++k) {
    for (int j = 0; j < static_cast<int>(obstacles.size()); ++j) {
      out.pairs.push_back({k, j, false});
    }
  }
  if (dual_mode) {
    out.pairs.push_back({0, 1, true});
    out.pairs.push_back({1, 0, true});
  }

  std::vector<double> knots = {0.0, horizon};
  for (const auto& key : out.pairs) {
    const BernsteinSegment sep =
        separation_poly(targets[key.target], pair_obstacle(key, targets, obstacles), horizon);
    if (sep.control_points().col(0).cwiseAbs().maxCoeff() < 1e-12) continue;
    for (double r : roots_in_interval(sep)) knots.push_back(r);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) { return std::abs(a - b) < kKnotMergeTol; }),
              knots.end());
  if (knots.back() < horizon - kKnotMergeTol) knots.push_back(horizon);

  // Sliver segments wreck the jerk-Gram conditioning (entries scale like
  // duration^-5); absorb any interior knot closer than 5% of the horizon to
  // its neighbor. Regime flags are re-evaluated at the merged midpoints and
  // the constraint builders tolerate the resulting boundary slop.
  const double min_len = 5e-2 * horizon;
  for (size_t i = 1; i + 1 < knots.size();) {
    if (knots[i] - knots[i - 1] < min_len || knots[i + 1] - knots[i] < min_len) {
      knots.erase(knots.begin() + i);
    } else {
      ++i;
    }
  }

  // Cap the segment count by merging the closest interior knots.
  while (static_cast<int>(knots.size()) - 1 > max_segments) {
    out.knots_merged = true;
    int best = 1;
    double best_gap = horizon;
    for (int i = 1; i + 1 < static_cast<int>(knots.size()); ++i) {
      const double gap = knots[i + 1] - knots[i];
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best + 2 == static_cast<int>(knots.size())) {
      knots.erase(knots.begin() + best);
    } else {
      knots[best] = 0.5 * (knots[best] + knots[best + 1]);
      knots.erase(knots.begin() + best + 1);
    }
  }
  out.knots = knots;

  const int segs = out.num_segments();
  out.separated.assign(out.pairs.size(), std::vector<std::uint8_t>(segs, 1));
  for (size_t p = 0; p < out.pairs.size(); ++p) {
    const auto& key = out.pairs[p];
    const BernsteinSegment sep =
        separation_poly(targets[key.target], pair_obstacle(key, targets, obstacles), horizon);
    for (int m = 0; m < segs; ++m) {
      const double mid = 0.5 * (knots[m] + knots[m + 1]);
      out.separated[p][m] = sep.evaluate_scalar(mid) > 0.0 ? 1 : 0;
    }
  }
  return out;
}

namespace {

struct RowSet {
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  std::vector<RowClass> classes;

  void add(Eigen::VectorXd row, double b, RowClass cls) {
    rows.push_back(std::move(row));
    rhs.push_back(b);
    classes.push_back(cls);
  }
};

int seg_offset(int m, int traj_degree) { return m * 2 * (traj_degree + 1); }

void add_dynamic_rows(const DroneState& state, const std::vector<double>& knots, int n_c,
                      double v_max, double a_max, int dim, RowSet* ineq,
                      std::vector<Eigen::VectorXd>* eq_rows, std::vector<double>* eq_rhs) {
  const int nc1 = n_c + 1;
  const int segs = static_cast<int>(knots.size()) - 1;
  auto unit = [&](int m, int axis, int j) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
    r(seg_offset(m, n_c) + axis * nc1 + j) = 1.0;
    return r;
  };

  // Initial position and velocity.
  for (int axis = 0; axis < 2; ++axis) {
    eq_rows->push_back(unit(0, axis, 0));
    eq_rhs->push_back(state.position(axis));
    const double dt = knots[1] - knots[0];
    Eigen::VectorXd r = (unit(0, axis, 1) - unit(0, axis, 0)) * (n_c / dt);
    eq_rows->push_back(r);
    eq_rhs->push_back(state.velocity(axis));
  }

  // C2 continuity at interior knots.
  for (int m = 0; m + 1 < segs; ++m) {
    const double dt0 = knots[m + 1] - knots[m];
    const double dt1 = knots[m + 2] - knots[m + 1];
    for (int axis = 0; axis < 2; ++axis) {
      eq_rows->push_back(unit(m, axis, n_c) - unit(m + 1, axis, 0));
      eq_rhs->push_back(0.0);

      Eigen::VectorXd vel = (unit(m, axis, n_c) - unit(m, axis, n_c - 1)) * (n_c / dt0) -
                            (unit(m + 1, axis, 1) - unit(m + 1, axis, 0)) * (n_c / dt1);
      eq_rows->push_back(vel);
      eq_rhs->push_back(0.0);

      const double s0 = n_c * (n_c - 1.0) / (dt0 * dt0);
      const double s1 = n_c * (n_c - 1.0) / (dt1 * dt1);
      Eigen::VectorXd acc =
          (unit(m, axis, n_c) - 2.0 * unit(m, axis, n_c - 1) + unit(m, axis, n_c - 2)) * s0 -
          (unit(m + 1, axis, 2) - 2.0 * unit(m + 1, axis, 1) + unit(m + 1, axis, 0)) * s1;
      eq_rows->push_back(acc);
      eq_rhs->push_back(0.0);
    }
  }

  // Per-axis velocity and acceleration boxes (1/sqrt(2) factor covers the
  // Euclidean limits).
  const double v_box = v_max / std::sqrt(2.0);
  const double a_box = a_max / std::sqrt(2.0);
  for (int m = 0; m < segs; ++m) {
    const double dt = knots[m + 1] - knots[m];
    for (int axis = 0; axis < 2; ++axis) {
      for (int j = 0; j < n_c; ++j) {
        const Eigen::VectorXd d = (unit(m, axis, j + 1) - unit(m, axis, j)) * (n_c / dt);
        ineq->add(-d, -v_box, RowClass::Dynamic);
        ineq->add(d, -v_box, RowClass::Dynamic);
      }
      const double s = n_c * (n_c - 1.0) / (dt * dt);
      for (int j = 0; j + 1 < n_c; ++j) {
        const Eigen::VectorXd d =
            (unit(m, axis, j + 2) - 2.0 * unit(m, axis, j + 1) + unit(m, axis, j)) * s;
        ineq->add(-d, -a_box, RowClass::Dynamic);
        ineq->add(d, -a_box, RowClass::Dynamic);
      }
    }
  }
}

OClass safe_obstacle_class(const Vec2& drone, const Vec2& target, const Vec2& obstacle) {
  if ((drone - obstacle).norm() < 1e-9 || (target - obstacle).norm() < 1e-9) return OClass::O1;
  return topology_class_obstacle(drone, target, obstacle);
}

DiskSegment disk_segment(const ReachableSetTrajectory& set, double a, double b) {
  return {set.center.restricted(a, b), set.radius.restricted(a, b)};
}

}  // namespace

Eigen::VectorXd pack_decision(const PiecewiseBernstein& traj) {
  const int nc1 = traj.segment(0).degree() + 1;
  Eigen::VectorXd z(2 * nc1 * traj.num_segments());
  for (int m = 0; m < traj.num_segments(); ++m) {
    z.segment(m * 2 * nc1, nc1) = traj.segment(m).control_points().col(0);
    z.segment(m * 2 * nc1 + nc1, nc1) = traj.segment(m).control_points().col(1);
  }
  return z;
}

PiecewiseBernstein unpack_decision(const Eigen::VectorXd& decision,
                                   const std::vector<double>& knots, int traj_degree) {
  const int nc1 = traj_degree + 1;
  const int segs = static_cast<int>(knots.size()) - 1;
  std::vector<BernsteinSegment> out;
  for (int m = 0; m < segs; ++m) {
    Eigen::MatrixXd pts(nc1, 2);
    pts.col(0) = decision.segment(m * 2 * nc1, nc1);
    pts.col(1) = decision.segment(m * 2 * nc1 + nc1, nc1);
    out.emplace_back(knots[m], knots[m + 1], pts);
  }
  return PiecewiseBernstein(std::move(out));
}

AssembledProblem assemble_problem(const PlanInput& input, const PlannerParams& params,
                                  const SegmentationResult& seg) {
  const int n_c = params.traj_degree;
  const int nc1 = n_c + 1;
  const int segs = seg.num_segments();
  const int dim = 2 * nc1 * segs;
  const bool dual = input.targets.size() == 2;
  const double horizon = params.horizon;
  const auto& knots = seg.knots;

  AssembledProblem out;
  out.knots = knots;
  out.traj_degree = n_c;

  // Previous plan with constant-velocity extension, fitted per segment.
  auto prev_at = [&](double t) -> Vec2 {
    if (!input.previous_plan.has_value()) return input.state.position;
    const auto& plan = *input.previous_plan;
    const double end = plan.end_time();
    if (t <= end) return plan.evaluate(t);
    return Vec2(plan.evaluate(end) + (t - end) * plan.derivative().evaluate(end));
  };
  std::vector<BernsteinSegment> prev_segments;
  for (int m = 0; m < segs; ++m) {
    Eigen::MatrixXd samples(nc1, 2);
    for (int l = 0; l <= n_c; ++l) {
      const double t = knots[m] + (knots[m + 1] - knots[m]) * l / n_c;
      samples.row(l) = prev_at(t).transpose();
    }
    prev_segments.push_back(interpolate_to_bernstein(samples, knots[m], knots[m + 1]));
  }

  // Interior knots for splitting the reachable sets.
  std::vector<double> interior(knots.begin() + 1, knots.end() - 1);
  std::vector<ReachableSetTrajectory> targets = input.targets;
  std::vector<ReachableSetTrajectory> obstacles = input.obstacles;
  for (auto& t : targets) {
    t.center = t.center.split_at(interior);
    t.radius = t.radius.split_at(interior);
  }
  for (auto& o : obstacles) {
    o.center = o.center.split_at(interior);
    o.radius = o.radius.split_at(interior);
  }

  RowSet ineq;
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  add_dynamic_rows(input.state, knots, n_c, params.v_max, params.a_max, dim, &ineq, &eq_rows,
                   &eq_rhs);

  // Topology classes at t = 0.
  std::vector<OClass> pair_class(seg.pairs.size());
  for (size_t p = 0; p < seg.pairs.size(); ++p) {
    const auto& key = seg.pairs[p];
    const auto& obst = pair_obstacle(key, targets, obstacles);
    pair_class[p] = safe_obstacle_class(input.state.position, targets[key.target].center_at(0.0),
                                        obst.center_at(0.0));
  }
  FClass fov_class = FClass::F1;
  if (dual) {
    const Vec2 q1 = targets[0].center_at(0.0);
    const Vec2 q2 = targets[1].center_at(0.0);
    if ((q2 - q1).norm() > 1e-9) fov_class = topology_class_fov(input.state.position, q1, q2);
  }

  auto add_series = [&](HalfspaceSegment&& hs, RowClass cls) {
    const int m = hs.segment_index;
    const auto& w = hs.poly.weights();
    const auto& b = hs.poly.offset();
    for (int k = 0; k < w.rows(); ++k) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
      row.segment(seg_offset(m, n_c), 2 * nc1) = w.row(k).transpose();
      ineq.add(std::move(row), -b(k), cls);
    }
    out.series.push_back(std::move(hs));
  };

  // TVR-O per (target, obstacle) pair and segment.
  for (size_t p = 0; p < seg.pairs.size(); ++p) {
    const auto& key = seg.pairs[p];
    const auto& obst = pair_obstacle(key, targets, obstacles);
    for (int m = 0; m < segs; ++m) {
      const DiskSegment tgt = disk_segment(targets[key.target], knots[m], knots[m + 1]);
      const DiskSegment obs = disk_segment(obst, knots[m], knots[m + 1]);
      const bool separated = seg.separated[p][m] != 0;
      HalfspaceSegment hs{separated ? ConstraintKind::TvrOSeparated : ConstraintKind::TvrOOverlap,
                          m,
                          tvr_obstacle(tgt, obs, pair_class[p], separated, n_c,
                                       params.interp_degree),
                          false};
      add_series(std::move(hs), RowClass::TvrO);
    }
  }

  // TVR-F per segment in dual mode.
  if (dual) {
    for (int m = 0; m < segs; ++m) {
      const BernsteinSegment q1 = targets[0].center.restricted(knots[m], knots[m + 1]);
      const BernsteinSegment q2 = targets[1].center.restricted(knots[m], knots[m + 1]);
      HalfspaceSegment hs{ConstraintKind::TvrF, m, tvr_fov(q1, q2, params.fov, fov_class, n_c),
                          false};
      add_series(std::move(hs), RowClass::TvrF);
    }
  }

  // Collision half-spaces against every obstacle and every target set.
  bool degenerate_any = false;
  auto add_collision = [&](const ReachableSetTrajectory& keep_out) {
    for (int m = 0; m < segs; ++m) {
      const DiskSegment obs = disk_segment(keep_out, knots[m], knots[m + 1]);
      bool degenerate = false;
      AffineBernstein poly = collision_halfspace(prev_segments[m], obs, params.drone_radius, n_c,
                                                 params.interp_degree, &degenerate);
      degenerate_any = degenerate_any || degenerate;
      add_series(HalfspaceSegment{ConstraintKind::Collision, m, std::move(poly), degenerate},
                 RowClass::Collision);
    }
  };
  for (const auto& o : obstacles) add_collision(o);
  for (const auto& t : targets) add_collision(t);
  out.degenerate_collision = degenerate_any;

  // Reference trajectory: per-obstacle classes/weights at t = 0, blended from
  // the current position.
  std::vector<std::vector<OClass>> ref_class(targets.size());
  std::vector<std::vector<double>> ref_weight(targets.size());
  for (size_t k = 0; k < targets.size(); ++k) {
    const Vec2 q0 = targets[k].center_at(0.0);
    for (const auto& o : obstacles) {
      const Vec2 o0 = o.center_at(0.0);
      ref_class[k].push_back(safe_obstacle_class(input.state.position, q0, o0));
      ref_weight[k].push_back(reference_weight((q0 - o0).norm()));
    }
  }
  Vec2 fallback_dir(1.0, 0.0);
  {
    const Vec2 bearing = input.state.position - input.targets[0].center_at(0.0);
    if (bearing.norm() > 1e-9) fallback_dir = bearing.normalized();
  }

  auto obstacles_at = [&](double t) {
    std::vector<DiskState> d;
    d.reserve(obstacles.size());
    for (const auto& o : obstacles) d.push_back({o.center_at(t), o.radius_at(t)});
    return d;
  };
  auto mu_at = [&](double t) -> Vec2 {
    if (!dual) {
      return single_ref(targets[0].center_at(t), obstacles_at(t), ref_class[0], ref_weight[0],
                        params.standoff, fallback_dir);
    }
    const Vec2 q1 = targets[0].center_at(t);
    const Vec2 q2 = targets[1].center_at(t);
    if ((targets[1].center_at(0.0) - targets[0].center_at(0.0)).norm() < 1e-2) {
      // Degenerate dual geometry: hold a single-target standoff on the pair.
      return single_ref(0.5 * (q1 + q2), obstacles_at(t), ref_class[0], ref_weight[0],
                        params.standoff, fallback_dir);
    }
    return dual_ref(q1, q2, obstacles_at(t), ref_class[0], ref_class[1], ref_weight[0],
                    ref_weight[1], params.fov, params.screen_ratio, fov_class,
                    params.mutual_weight);
  };
  auto ref_at = [&](double t) -> Vec2 {
    const double alpha = t / horizon;
    return (1.0 - alpha) * input.state.position + alpha * mu_at(t);
  };
  for (int m = 0; m < segs; ++m) {
    Eigen::MatrixXd samples(nc1, 2);
    for (int l = 0; l <= n_c; ++l) {
      const double t = knots[m] + (knots[m + 1] - knots[m]) * l / n_c;
      samples.row(l) = ref_at(t).transpose();
    }
    out.reference.push_back(interpolate_to_bernstein(samples, knots[m], knots[m + 1]));
  }

  // Cost: 2 * (w_j jerk + w_e track) per axis block, gradient from the
  // reference tracking term.
  out.qp.hessian = Eigen::MatrixXd::Zero(dim, dim);
  out.qp.gradient = Eigen::VectorXd::Zero(dim);
  for (int m = 0; m < segs; ++m) {
    const double dt = knots[m + 1] - knots[m];
    const Eigen::MatrixXd track = track_gram(n_c, dt);
    const Eigen::MatrixXd block =
        params.jerk_weight * jerk_gram(n_c, dt) + params.track_weight * track;
    for (int axis = 0; axis < 2; ++axis) {
      const int off = seg_offset(m, n_c) + axis * nc1;
      out.qp.hessian.block(off, off, nc1, nc1) = 2.0 * block;
      out.qp.gradient.segment(off, nc1) =
          -2.0 * params.track_weight * track * out.reference[m].control_points().col(axis);
    }
  }

  const int n_ineq = static_cast<int>(ineq.rows.size());
  out.qp.a_ineq.resize(n_ineq, dim);
  out.qp.b_ineq.resize(n_ineq);
  for (int i = 0; i < n_ineq; ++i) {
    out.qp.a_ineq.row(i) = ineq.rows[i].transpose();
    out.qp.b_ineq(i) = ineq.rhs[i];
  }
  out.ineq_classes = std::move(ineq.classes);

  const int n_eq = static_cast<int>(eq_rows.size());
  out.qp.a_eq.resize(n_eq, dim);
  out.qp.b_eq.resize(n_eq);
  for (int i = 0; i < n_eq; ++i) {
    out.qp.a_eq.row(i) = eq_rows[i].transpose();
    out.qp.b_eq(i) = eq_rhs[i];
  }
  return out;
}

AssembledProblem relax_visibility_rows(const AssembledProblem& base, double slack_weight) {
  const int dim = static_cast<int>(base.qp.hessian.rows());
  // One slack per visibility series; collision and dynamic rows stay hard.
  std::vector<int> series_slack(base.series.size(), -1);
  int n_slack = 0;
  for (size_t s = 0; s < base.series.size(); ++s) {
    if (base.series[s].kind != ConstraintKind::Collision) series_slack[s] = n_slack++;
  }

  AssembledProblem out = base;
  const int dim2 = dim + n_slack;
  out.qp.hessian = Eigen::MatrixXd::Zero(dim2, dim2);
  out.qp.hessian.topLeftCorner(dim, dim) = base.qp.hessian;
  out.qp.hessian.bottomRightCorner(n_slack, n_slack) =
      2.0 * slack_weight * Eigen::MatrixXd::Identity(n_slack, n_slack);
  out.qp.gradient = Eigen::VectorXd::Zero(dim2);
  out.qp.gradient.head(dim) = base.qp.gradient;

  // Map each visibility row to its series' slack column. Rows were appended
  // series by series in assemble_problem, after the dynamic rows.
  std::vector<int> row_slack(base.qp.a_ineq.rows(), -1);
  int row = 0;
  while (row < static_cast<int>(base.ineq_classes.size()) &&
         base.ineq_classes[row] == RowClass::Dynamic) {
    ++row;
  }
  for (size_t s = 0; s < base.series.size(); ++s) {
    const int count = base.series[s].poly.degree() + 1;
    for (int k = 0; k < count; ++k, ++row) {
      row_slack[row] = series_slack[s];
    }
  }

  const int n_rows = static_cast<int>(base.qp.a_ineq.rows());
  out.qp.a_ineq = Eigen::MatrixXd::Zero(n_rows + n_slack, dim2);
  out.qp.b_ineq = Eigen::VectorXd::Zero(n_rows + n_slack);
  out.qp.a_ineq.topLeftCorner(n_rows, dim) = base.qp.a_ineq;
  out.qp.b_ineq.head(n_rows) = base.qp.b_ineq;
  for (int i = 0; i < n_rows; ++i) {
    if (row_slack[i] >= 0) out.qp.a_ineq(i, dim + row_slack[i]) = 1.0;
  }
  out.ineq_classes = base.ineq_classes;
  for (int s = 0; s < n_slack; ++s) {
    out.qp.a_ineq(n_rows + s, dim + s) = 1.0;  // slack >= 0
    out.ineq_classes.push_back(RowClass::Slack);
  }

  out.qp.a_eq = Eigen::MatrixXd::Zero(base.qp.a_eq.rows(), dim2);
  out.qp.a_eq.leftCols(dim) = base.qp.a_eq;
  out.qp.b_eq = base.qp.b_eq;
  return out;
}

double constraint_margin(const AssembledProblem& problem, const Eigen::VectorXd& decision,
                         int grid_points) {
  if (problem.series.empty()) return 0.0;
  const int nc1 = problem.traj_degree + 1;
  double worst = std::numeric_limits<double>::infinity();
  const int per_series = std::max(8, grid_points / static_cast<int>(problem.series.size()));
  for (const auto& hs : problem.series) {
    const Eigen::VectorXd local =
        decision.segment(seg_offset(hs.segment_index, problem.traj_degree), 2 * nc1);
    const BernsteinSegment poly = hs.poly.substitute(local);
    for (int i = 0; i <= per_series; ++i) {
      const double t = poly.start_time() +
                       (poly.end_time() - poly.start_time()) * i / per_series;
      worst = std::min(worst, poly.evaluate_scalar(t));
    }
  }
  return worst;
}

namespace {

PiecewiseBernstein brake_trajectory(const DroneState& state, double horizon, double a_max,
                                    int n_c) {
  const double speed = state.velocity.norm();
  if (speed < 1e-4) {
    Eigen::MatrixXd pts(1, 2);
    pts.row(0) = state.position.transpose();
    return PiecewiseBernstein::single(BernsteinSegment(0.0, horizon, pts).elevated(n_c));
  }
  const double t_stop = speed / a_max;
  const Vec2 dir = state.velocity / speed;
  auto quadratic = [&](double t0, double t1) {
    // p(t) = p0 + v t - 1/2 a_max dir t^2 in Bernstein form (degree 2).
    const double dt = t1 - t0;
    const Vec2 p0 = state.position;
    const Vec2 v0 = state.velocity;
    const Vec2 acc = -a_max * dir;
    Eigen::MatrixXd pts(3, 2);
    pts.row(0) = p0.transpose();
    pts.row(1) = (p0 + 0.5 * dt * v0).transpose();
    pts.row(2) = (p0 + dt * v0 + 0.5 * dt * dt * acc).transpose();
    return BernsteinSegment(t0, t1, pts).elevated(n_c);
  };
  if (t_stop >= horizon - 1e-4) {
    return PiecewiseBernstein::single(quadratic(0.0, horizon));
  }
  const BernsteinSegment decel = quadratic(0.0, t_stop);
  const Vec2 rest = decel.evaluate(t_stop);
  Eigen::MatrixXd pts(1, 2);
  pts.row(0) = rest.transpose();
  std::vector<BernsteinSegment> segs{decel,
                                     BernsteinSegment(t_stop, horizon, pts).elevated(n_c)};
  return PiecewiseBernstein(std::move(segs));
}

void fill_kinematics(PlanResult* result, int grid = 400) {
  const auto& traj = result->trajectory;
  const PiecewiseBernstein vel = traj.derivative();
  const PiecewiseBernstein acc = vel.derivative();
  double vmax = 0.0;
  double amax = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double t =
        traj.start_time() + (traj.end_time() - traj.start_time()) * i / grid;
    vmax = std::max(vmax, vel.evaluate(t).norm());
    amax = std::max(amax, acc.evaluate(t).norm());
  }
  result->diagnostics.max_speed = vmax;
  result->diagnostics.max_accel = amax;
}

}  // namespace

PlanResult plan(const PlanInput& input, const PlannerParams& params) {
  if (input.targets.empty() || input.targets.size() > 2)
    throw std::invalid_argument("plan: expected one or two targets");
  const bool dual = input.targets.size() == 2;
  const auto t_begin = std::chrono::steady_clock::now();

  const SegmentationResult seg = segment_horizon(input.targets, input.obstacles, params.horizon,
                                                 params.max_segments, dual);

  PlanResult result;
  AssembledProblem problem;
  bool assembled = false;
  try {
    problem = assemble_problem(input, params, seg);
    assembled = true;
  } catch (const std::exception&) {
    // Degenerate geometry (e.g. regime slop beyond tolerance); fall through
    // to the ladder below.
  }
  if (!assembled) {
    problem.knots = seg.knots;
    problem.traj_degree = params.traj_degree;
  }
  result.diagnostics.degenerate_collision = problem.degenerate_collision;

  Eigen::VectorXd decision;
  bool solved = false;
  if (assembled) {
    try {
      QpSolution sol = solve_qp(problem.qp);
      result.diagnostics.qp_status = sol.status;
      result.diagnostics.iterations = sol.iterations;
      if (sol.status == QpStatus::Optimal) {
        solved = true;
        decision = sol.x;
        result.status = PlanStatus::Optimal;
      } else {
        const AssembledProblem relaxed = relax_visibility_rows(problem, params.slack_weight);
        QpSolution relaxed_sol = solve_qp(relaxed.qp);
        result.diagnostics.qp_status = relaxed_sol.status;
        result.diagnostics.iterations += relaxed_sol.iterations;
        if (relaxed_sol.status == QpStatus::Optimal) {
          solved = true;
          result.diagnostics.used_slack = true;
          decision = relaxed_sol.x.head(problem.decision_dim());
          result.status = PlanStatus::FallbackRelaxed;
        }
      }
    } catch (const std::exception&) {
      solved = false;  // conditioning failure counts as a solve failure
    }
  }

  if (solved) {
    result.trajectory = unpack_decision(decision, problem.knots, params.traj_degree);
    result.diagnostics.min_constraint_margin = constraint_margin(problem, decision);
    if (result.status == PlanStatus::FallbackRelaxed &&
        result.diagnostics.min_constraint_margin >= -1e-6) {
      result.status = PlanStatus::Optimal;  // slack solved a numerical wobble only
    }
  } else if (input.previous_plan.has_value()) {
    // Reuse the time-shifted previous plan, refit on the current knots.
    auto prev_at = [&](double t) -> Vec2 {
      const auto& plan_prev = *input.previous_plan;
      const double end = plan_prev.end_time();
      if (t <= end) return plan_prev.evaluate(t);
      return Vec2(plan_prev.evaluate(end) + (t - end) * plan_prev.derivative().evaluate(end));
    };
    std::vector<BernsteinSegment> segs_fit;
    const int nc1 = params.traj_degree + 1;
    for (int m = 0; m + 1 < static_cast<int>(problem.knots.size()); ++m) {
      Eigen::MatrixXd samples(nc1, 2);
      for (int l = 0; l <= params.traj_degree; ++l) {
        const double t =
            problem.knots[m] + (problem.knots[m + 1] - problem.knots[m]) * l / params.traj_degree;
        samples.row(l) = prev_at(t).transpose();
      }
      segs_fit.push_back(
          interpolate_to_bernstein(samples, problem.knots[m], problem.knots[m + 1]));
    }
    result.trajectory = PiecewiseBernstein(std::move(segs_fit));
    result.status = PlanStatus::FallbackPrevious;
    result.diagnostics.min_constraint_margin =
        assembled ? constraint_margin(problem, pack_decision(result.trajectory))
                  : std::numeric_limits<double>::quiet_NaN();
  } else {
    result.trajectory =
        brake_trajectory(input.state, params.horizon, params.a_max, params.traj_degree);
    result.status = PlanStatus::FallbackStop;
    result.diagnostics.min_constraint_margin = std::numeric_limits<double>::quiet_NaN();
  }

  fill_kinematics(&result);
  result.diagnostics.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_begin)
          .count();
  return result;
}

}  // namespace qpchaser
