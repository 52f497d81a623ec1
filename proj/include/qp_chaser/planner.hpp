#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qp_chaser/prediction.hpp"
#include "qp_chaser/qp_solver.hpp"
#include "qp_chaser/reference.hpp"
#include "qp_chaser/visibility.hpp"

namespace qpchaser {

struct PlannerParams {
  int traj_degree = 6;      // n_c
  double horizon = 1.5;     // T
  double v_max = 4.0;
  double a_max = 5.0;
  double standoff = 4.0;    // r_d
  double screen_ratio = 1.0;  // gamma_c
  double track_weight = 10.0; // w_e
  double jerk_weight = 1.0;   // w_j
  double fov = 2.0 * M_PI / 3.0;  // theta_f
  double drone_radius = 0.4;      // r_c
  int max_segments = 8;
  int interp_degree = 6;    // degree of interpolated sqrt terms
  double mutual_weight = 1.0;     // w_m
  double slack_weight = 1e4;
};

struct DroneState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

struct PlanInput {
  DroneState state;
  std::optional<PiecewiseBernstein> previous_plan;  // on [0, horizon_prev], drone frame of now
  std::vector<ReachableSetTrajectory> targets;      // 1 (single) or 2 (dual)
  std::vector<ReachableSetTrajectory> obstacles;    // static disks and dynamic predictions
};

/// One constrained pair: target k against obstacle j, or against the other
/// target when obstacle_is_target is set (dual-target occlusion).
struct PairKey {
  int target = 0;
  int obstacle = 0;
  bool obstacle_is_target = false;
};

struct SegmentationResult {
  std::vector<double> knots;                       // T_0=0 < ... < T_M=horizon
  std::vector<PairKey> pairs;
  std::vector<std::vector<std::uint8_t>> separated;  // [pair][segment]
  bool knots_merged = false;                       // M_max cap forced knot merging

  int num_segments() const { return static_cast<int>(knots.size()) - 1; }
};

SegmentationResult segment_horizon(const std::vector<ReachableSetTrajectory>& targets,
                                   const std::vector<ReachableSetTrajectory>& obstacles,
                                   double horizon, int max_segments, bool dual_mode);

enum class RowClass { Dynamic, TvrO, TvrF, Collision, Slack };

/// Fully assembled QP plus the constraint series needed for margin audits.
struct AssembledProblem {
  QpProblem qp;
  std::vector<RowClass> ineq_classes;   // one per inequality row
  std::vector<HalfspaceSegment> series;  // every visibility/collision polynomial
  std::vector<double> knots;
  std::vector<BernsteinSegment> reference;  // fitted reference per segment (2 axes)
  int traj_degree = 6;
  bool degenerate_collision = false;

  int decision_dim() const { return 2 * (traj_degree + 1) * (static_cast<int>(knots.size()) - 1); }
};

AssembledProblem assemble_problem(const PlanInput& input, const PlannerParams& params,
                                  const SegmentationResult& seg);

/// Slack-augmented copy: every TVR row gains a per-series slack variable with
/// quadratic penalty; collision and dynamic rows stay hard.
AssembledProblem relax_visibility_rows(const AssembledProblem& base, double slack_weight);

/// Decision vector of a piecewise trajectory (for tests): [seg][axis][coeff].
Eigen::VectorXd pack_decision(const PiecewiseBernstein& traj);
PiecewiseBernstein unpack_decision(const Eigen::VectorXd& decision,
                                   const std::vector<double>& knots, int traj_degree);

enum class PlanStatus { Optimal, FallbackRelaxed, FallbackPrevious, FallbackStop };

struct PlanDiagnostics {
  double solve_time_ms = 0.0;
  int iterations = 0;
  double min_constraint_margin = 0.0;  // dense grid over visibility+collision series
  double max_speed = 0.0;
  double max_accel = 0.0;
  bool used_slack = false;
  bool degenerate_collision = false;
  QpStatus qp_status = QpStatus::Infeasible;
};

struct PlanResult {
  PiecewiseBernstein trajectory;
  PlanStatus status = PlanStatus::FallbackStop;
  PlanDiagnostics diagnostics;
};

/// Full pipeline: segmentation, constraint assembly, reference, QP solve,
/// and the fallback ladder (slack retry, previous plan, brake to stop).
PlanResult plan(const PlanInput& input, const PlannerParams& params);

/// Minimum value over a dense grid of every visibility/collision polynomial
/// for the given trajectory.
double constraint_margin(const AssembledProblem& problem, const Eigen::VectorXd& decision,
                         int grid_points = 1000);

}  // namespace qpchaser
