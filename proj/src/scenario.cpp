#include "qp_chaser/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qpchaser {

using nlohmann::json;

std::vector<int> Scenario::target_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(objects.size()); ++i) {
    if (objects[i].role == ObjectRole::Target) out.push_back(i);
  }
  return out;
}

std::vector<int> Scenario::interrupter_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(objects.size()); ++i) {
    if (objects[i].role == ObjectRole::Interrupter) out.push_back(i);
  }
  return out;
}

CubicSplinePath::CubicSplinePath(const std::vector<Waypoint>& waypoints) {
  if (waypoints.empty()) throw ScenarioError("spline: no waypoints");
  const int n = static_cast<int>(waypoints.size());
  times_.resize(n);
  Eigen::MatrixXd y(n, 2);
  for (int i = 0; i < n; ++i) {
    times_[i] = waypoints[i].time;
    y.row(i) = waypoints[i].position.transpose();
    if (i > 0 && times_[i] <= times_[i - 1])
      throw ScenarioError("spline: waypoint times must be strictly increasing");
  }
  if (n == 1) {
    a_ = y;
    b_ = c_ = d_ = Eigen::MatrixXd::Zero(1, 2);
    times_.push_back(times_[0] + 1.0);
    return;
  }
  const int m = n - 1;
  a_.resize(m, 2);
  b_.resize(m, 2);
  c_.resize(m, 2);
  d_.resize(m, 2);

  // Natural cubic spline second derivatives via the standard tridiagonal system.
  Eigen::VectorXd h(m);
  for (int i = 0; i < m; ++i) h(i) = times_[i + 1] - times_[i];
  Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(n, 2);
  if (n > 2) {
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(n - 2, n - 2);
    Eigen::MatrixXd rhs(n - 2, 2);
    for (int i = 1; i < n - 1; ++i) {
      const int r = i - 1;
      tri(r, r) = 2.0 * (h(i - 1) + h(i));
      if (r > 0) tri(r, r - 1) = h(i - 1);
      if (r < n - 3) tri(r, r + 1) = h(i);
      rhs.row(r) = 6.0 * ((y.row(i + 1) - y.row(i)) / h(i) - (y.row(i) - y.row(i - 1)) / h(i - 1));
    }
    mom.middleRows(1, n - 2) = tri.partialPivLu().solve(rhs);
  }
  for (int i = 0; i < m; ++i) {
    a_.row(i) = y.row(i);
    c_.row(i) = mom.row(i) / 2.0;
    d_.row(i) = (mom.row(i + 1) - mom.row(i)) / (6.0 * h(i));
    b_.row(i) = (y.row(i + 1) - y.row(i)) / h(i) - h(i) / 6.0 * (2.0 * mom.row(i) + mom.row(i + 1));
  }
}

Vec2 CubicSplinePath::position(double t) const {
  const int m = static_cast<int>(a_.rows());
  if (t <= times_.front()) return a_.row(0).transpose();
  if (t >= times_.back()) {
    const double dt = times_[m] - times_[m - 1];
    return (a_.row(m - 1) + b_.row(m - 1) * dt + c_.row(m - 1) * dt * dt +
            d_.row(m - 1) * dt * dt * dt)
        .transpose();
  }
  int i = 0;
  while (i + 1 < m && t >= times_[i + 1]) ++i;
  const double dt = t - times_[i];
  return (a_.row(i) + b_.row(i) * dt + c_.row(i) * dt * dt + d_.row(i) * dt * dt * dt)
      .transpose();
}

Vec2 CubicSplinePath::velocity(double t) const {
  const int m = static_cast<int>(a_.rows());
  if (t <= times_.front() || t >= times_.back()) return Vec2::Zero();
  int i = 0;
  while (i + 1 < m && t >= times_[i + 1]) ++i;
  const double dt = t - times_[i];
  return (b_.row(i) + 2.0 * c_.row(i) * dt + 3.0 * d_.row(i) * dt * dt).transpose();
}

namespace {

Vec2 parse_vec2(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2)
    throw ScenarioError("expected [x, y] at " + where);
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

void validate(const Scenario& s) {
  const auto targets = s.target_indices();
  if (s.dual_mode && targets.size() != 2)
    throw ScenarioError("dual mode requires exactly 2 targets, found " +
                        std::to_string(targets.size()));
  if (!s.dual_mode && targets.size() != 1)
    throw ScenarioError("single mode requires exactly 1 target, found " +
                        std::to_string(targets.size()));

  // P1: scripted paths keep clear of static obstacles inflated by body radius.
  for (size_t i = 0; i < s.objects.size(); ++i) {
    const auto& obj = s.objects[i];
    if (obj.waypoints.empty())
      throw ScenarioError("object " + std::to_string(i) + " has no waypoints");
    const CubicSplinePath path(obj.waypoints);
    const double t0 = obj.waypoints.front().time;
    const double t1 = obj.waypoints.back().time;
    const int samples = 2000;
    for (int k = 0; k <= samples; ++k) {
      const double t = t0 + (t1 - t0) * k / samples;
      const Vec2 p = path.position(t);
      for (size_t o = 0; o < s.obstacles.size(); ++o) {
        if ((p - s.obstacles[o].center).norm() < s.obstacles[o].radius + obj.body_radius) {
          // Name the nearest waypoint for the error message.
          size_t nearest = 0;
          double best = std::abs(obj.waypoints[0].time - t);
          for (size_t w = 1; w < obj.waypoints.size(); ++w) {
            const double d = std::abs(obj.waypoints[w].time - t);
            if (d < best) {
              best = d;
              nearest = w;
            }
          }
          throw ScenarioError("object " + std::to_string(i) + " waypoint " +
                              std::to_string(nearest) + " drives the script through obstacle " +
                              std::to_string(o) + " (t=" + std::to_string(t) + ")");
        }
      }
    }
  }
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("json parse error: ") + e.what());
  }
  Scenario s;
  if (!j.contains("schema") || j["schema"].get<int>() != 1)
    throw ScenarioError("missing or unsupported schema (expected 1)");
  s.name = j.value("name", std::string("scenario"));
  const std::string mode = j.value("mode", std::string("single"));
  if (mode != "single" && mode != "dual") throw ScenarioError("mode must be single or dual");
  s.dual_mode = mode == "dual";

  for (const auto& jo : j.value("static_obstacles", json::array())) {
    StaticObstacle o;
    o.center = parse_vec2(jo.at("center"), "static_obstacles.center");
    o.radius = jo.at("radius").get<double>();
    if (o.radius <= 0.0) throw ScenarioError("static obstacle radius must be positive");
    s.obstacles.push_back(o);
  }

  if (!j.contains("moving_objects")) throw ScenarioError("missing moving_objects");
  for (const auto& jo : j["moving_objects"]) {
    MovingObjectSpec m;
    const std::string role = jo.at("role").get<std::string>();
    if (role == "target")
      m.role = ObjectRole::Target;
    else if (role == "interrupter")
      m.role = ObjectRole::Interrupter;
    else
      throw ScenarioError("object role must be target or interrupter");
    m.body_radius = jo.value("body_radius", 0.3);
    m.noise_sigma = jo.value("noise_sigma", 0.0);
    for (const auto& jw : jo.at("waypoints")) {
      Waypoint w;
      w.time = jw.at("t").get<double>();
      w.position = parse_vec2(jw.at("pos"), "waypoints.pos");
      m.waypoints.push_back(w);
    }
    s.objects.push_back(std::move(m));
  }

  const json jd = j.value("drone", json::object());
  if (jd.contains("start_position")) s.drone_start = parse_vec2(jd["start_position"], "drone");
  if (jd.contains("start_velocity"))
    s.drone_start_velocity = parse_vec2(jd["start_velocity"], "drone");
  if (jd.contains("radius")) s.params.planner.drone_radius = jd["radius"].get<double>();

  const json jp = j.value("params", json::object());
  auto& p = s.params;
  p.horizon = jp.value("horizon", 1.5);
  p.n_samples = jp.value("n_samples", 1000);
  p.primitive_degree = jp.value("primitive_degree", 3);
  p.outlier_ratio = jp.value("outlier_ratio", 0.0);
  p.process_noise = jp.value("process_noise", 1.0);
  p.replan_rate = jp.value("replan_rate", 10.0);
  p.integration_step = jp.value("integration_step", 0.005);
  p.seed = jp.value("seed", 1);
  p.planner.horizon = p.horizon;
  p.planner.traj_degree = jp.value("trajectory_degree", 6);
  p.planner.v_max = jp.value("v_max", 4.0);
  p.planner.a_max = jp.value("a_max", 5.0);
  p.planner.standoff = jp.value("standoff_distance", 4.0);
  p.planner.screen_ratio = jp.value("screen_ratio", 1.0);
  p.planner.track_weight = jp.value("track_weight", 10.0);
  p.planner.jerk_weight = jp.value("jerk_weight", 1.0);
  p.planner.fov = jp.value("fov_deg", 120.0) * M_PI / 180.0;
  p.planner.max_segments = jp.value("max_segments", 8);
  p.planner.mutual_weight = jp.value("mutual_weight", 1.0);

  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = s.schema;
  j["name"] = s.name;
  j["mode"] = s.dual_mode ? "dual" : "single";
  j["static_obstacles"] = json::array();
  for (const auto& o : s.obstacles) {
    j["static_obstacles"].push_back({{"center", vec2_to_json(o.center)}, {"radius", o.radius}});
  }
  j["moving_objects"] = json::array();
  for (const auto& m : s.objects) {
    json jo;
    jo["role"] = m.role == ObjectRole::Target ? "target" : "interrupter";
    jo["body_radius"] = m.body_radius;
    jo["noise_sigma"] = m.noise_sigma;
    jo["waypoints"] = json::array();
    for (const auto& w : m.waypoints) {
      jo["waypoints"].push_back({{"t", w.time}, {"pos", vec2_to_json(w.position)}});
    }
    j["moving_objects"].push_back(std::move(jo));
  }
  j["drone"] = {{"start_position", vec2_to_json(s.drone_start)},
                {"start_velocity", vec2_to_json(s.drone_start_velocity)},
                {"radius", s.params.planner.drone_radius}};
  const auto& p = s.params;
  j["params"] = {{"horizon", p.horizon},
                 {"n_samples", p.n_samples},
                 {"primitive_degree", p.primitive_degree},
                 {"outlier_ratio", p.outlier_ratio},
                 {"process_noise", p.process_noise},
                 {"replan_rate", p.replan_rate},
                 {"integration_step", p.integration_step},
                 {"seed", p.seed},
                 {"trajectory_degree", p.planner.traj_degree},
                 {"v_max", p.planner.v_max},
                 {"a_max", p.planner.a_max},
                 {"standoff_distance", p.planner.standoff},
                 {"screen_ratio", p.planner.screen_ratio},
                 {"track_weight", p.planner.track_weight},
                 {"jerk_weight", p.planner.jerk_weight},
                 {"fov_deg", p.planner.fov * 180.0 / M_PI},
                 {"max_segments", p.planner.max_segments},
                 {"mutual_weight", p.planner.mutual_weight}};
  return j.dump(2);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file: " + path);
  out << scenario_to_json(scenario) << "\n";
}

}  // namespace qpchaser
