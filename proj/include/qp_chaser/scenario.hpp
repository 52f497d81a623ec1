#pragma once

#include <string>
#include <vector>

#include "qp_chaser/planner.hpp"
#include "qp_chaser/prediction.hpp"

namespace qpchaser {

struct StaticObstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
};

enum class ObjectRole { Target, Interrupter };

struct Waypoint {
  double time = 0.0;
  Vec2 position = Vec2::Zero();
};

struct MovingObjectSpec {
  ObjectRole role = ObjectRole::Target;
  double body_radius = 0.3;
  double noise_sigma = 0.0;  // observation noise std (position and velocity)
  std::vector<Waypoint> waypoints;
};

struct SimParams {
  double horizon = 1.5;
  int n_samples = 1000;
  int primitive_degree = 3;
  double outlier_ratio = 0.0;
  double process_noise = 1.0;  // sigma^2 of the CV acceleration disturbance
  PlannerParams planner;
  double replan_rate = 10.0;
  double integration_step = 0.005;
  std::uint64_t seed = 1;
};

struct Scenario {
  int schema = 1;
  std::string name = "scenario";
  bool dual_mode = false;
  std::vector<StaticObstacle> obstacles;
  std::vector<MovingObjectSpec> objects;
  Vec2 drone_start = Vec2::Zero();
  Vec2 drone_start_velocity = Vec2::Zero();
  SimParams params;

  std::vector<int> target_indices() const;
  std::vector<int> interrupter_indices() const;
};

/// Load error carrying the offending location (field or waypoint).
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
void save_scenario(const Scenario& scenario, const std::string& path);
std::string scenario_to_json(const Scenario& scenario);

/// Natural cubic spline through the scripted waypoints; clamps (holds the
/// endpoint, zero velocity) outside the scripted time range.
class CubicSplinePath {
 public:
  CubicSplinePath() = default;
  explicit CubicSplinePath(const std::vector<Waypoint>& waypoints);

  Vec2 position(double t) const;
  Vec2 velocity(double t) const;
  double start_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }

 private:
  std::vector<double> times_;
  // Per-axis cubic coefficients on each interval: p(t) = a + b dt + c dt^2 + d dt^3.
  Eigen::MatrixXd a_, b_, c_, d_;  // rows = intervals, cols = 2 axes
};

}  // namespace qpchaser
