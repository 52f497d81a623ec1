#pragma once

#include <string>
#include <vector>

#include "qp_chaser/scenario.hpp"

namespace qpchaser {

struct ObjectSnapshot {
  Vec2 true_position = Vec2::Zero();
  Vec2 predicted_center = Vec2::Zero();  // current prediction at local time 0
  double predicted_radius = 0.0;
};

struct TraceRecord {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
  PlanStatus plan_status = PlanStatus::Optimal;
  double solve_time_ms = 0.0;
  double constraint_margin = 0.0;
  std::vector<ObjectSnapshot> objects;        // scenario object order
  std::vector<double> target_distances;       // per target
  double min_obstacle_distance = 0.0;         // to boundary, not r_c-inflated
  double visibility_score = 0.0;
  double fov_margin = 0.0;                    // theta_f - inscribed angle (dual), else NaN
};

struct FineSample {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
};

struct RunResult {
  std::vector<TraceRecord> records;
  std::vector<std::vector<ReachableSetTrajectory>> predictions;  // [step][object]
  std::vector<PiecewiseBernstein> plans;                          // [step]
  std::vector<FineSample> fine_path;                              // integration grid
  double control_period = 0.1;
};

/// Closed-loop simulation: observe with noise, predict obstacles then
/// targets, plan, execute the plan kinematically. Deterministic per seed.
RunResult run(const Scenario& scenario, double duration, std::uint64_t seed);

struct MetricsSummary {
  int steps = 0;
  std::vector<double> min_target_distance;
  std::vector<double> mean_target_distance;
  double min_obstacle_clearance = 0.0;  // boundary distance minus r_c
  double min_visibility_score = 0.0;
  double min_fov_margin = 0.0;  // dual mode, NaN otherwise
  int optimal_count = 0;
  int relaxed_count = 0;
  int fallback_previous_count = 0;
  int fallback_stop_count = 0;
  double solve_ms_p50 = 0.0;
  double solve_ms_p90 = 0.0;
  double solve_ms_max = 0.0;
};

MetricsSummary metrics(const RunResult& run, const Scenario& scenario);

struct OracleReport {
  int los_checks = 0;
  int los_violations = 0;
  double worst_los_margin = 0.0;  // signed clearance of the worst line-of-sight
  int containment_pairs = 0;      // (prediction, object) pairs fully contained
  int containment_total = 0;
  double containment_rate = 1.0;
  double max_speed = 0.0;         // finite differences on the executed path
  double max_accel = 0.0;
  int dynamic_violations = 0;
  double max_handoff_velocity_gap = 0.0;  // C1 across replans

  bool clean(double v_max, double a_max) const {
    return los_violations == 0 && dynamic_violations == 0 && max_speed <= v_max + 1e-3 &&
           max_accel <= a_max + 1e-3;
  }
};

OracleReport oracle_suite(const RunResult& run, const Scenario& scenario);

/// Trace file I/O. The CSV column set is stable and documented in the README.
void write_trace_csv(const std::string& path, const RunResult& run, const Scenario& scenario);
std::string summary_to_json(const MetricsSummary& m, const OracleReport& o);

/// Re-reads a trace CSV and recomputes every derived column from the raw
/// state columns; returns a list of human-readable mismatches (empty = ok).
std::vector<std::string> verify_trace(const std::string& path, const Scenario* scenario);

}  // namespace qpchaser
