#include "qp_chaser/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "qp_chaser/reference.hpp"

namespace qpchaser {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1) + 0xbf58476d1ce4e5b9ULL * (c + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int worker_threads() {
  const char* env = std::getenv("QPCHASER_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return std::max(1, n);
}

/// Signed clearance between segment [a, b] and a disk boundary.
double segment_disk_clearance(const Vec2& a, const Vec2& b, const Vec2& center, double radius) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  double u = 0.0;
  if (len2 > 1e-18) u = std::clamp((center - a).dot(d) / len2, 0.0, 1.0);
  return (a + u * d - center).norm() - radius;
}

PiecewiseBernstein shift_plan(const PiecewiseBernstein& plan, double delta) {
  const double end = plan.end_time();
  std::vector<BernsteinSegment> out;
  const PiecewiseBernstein cut = plan.split_at({delta});
  for (const auto& seg : cut.segments()) {
    if (seg.end_time() <= delta + 1e-12) continue;
    out.emplace_back(seg.start_time() - delta, seg.end_time() - delta, seg.control_points());
  }
  if (out.empty()) {
    Eigen::MatrixXd pts(1, 2);
    pts.row(0) = plan.evaluate(end).transpose();
    out.emplace_back(0.0, 0.1, pts);
  }
  return PiecewiseBernstein(std::move(out));
}

struct DiskSnapshot {
  Vec2 center;
  double radius;
};

/// All disks that can occlude target k at a record: static obstacles,
/// interrupters, and the other target in dual mode (true positions).
std::vector<DiskSnapshot> occluder_disks(const Scenario& scenario,
                                         const std::vector<Vec2>& true_positions,
                                         int target_obj_index) {
  std::vector<DiskSnapshot> disks;
  for (const auto& o : scenario.obstacles) disks.push_back({o.center, o.radius});
  for (int i = 0; i < static_cast<int>(scenario.objects.size()); ++i) {
    if (i == target_obj_index) continue;
    disks.push_back({true_positions[i], scenario.objects[i].body_radius});
  }
  return disks;
}

double record_visibility_score(const Scenario& scenario, const Vec2& drone,
                               const std::vector<Vec2>& true_positions) {
  double score = 1e9;
  for (int ti : scenario.target_indices()) {
    const Vec2 q = true_positions[ti];
    if ((q - drone).norm() < 1e-9) continue;
    for (const auto& disk : occluder_disks(scenario, true_positions, ti)) {
      score = std::min(score, visibility_score(drone, q, disk.center, disk.radius));
    }
  }
  return score;
}

double record_min_obstacle_distance(const Scenario& scenario, const Vec2& drone,
                                    const std::vector<Vec2>& true_positions) {
  double dist = 1e9;
  for (const auto& o : scenario.obstacles) dist = std::min(dist, (drone - o.center).norm() - o.radius);
  for (int i : scenario.interrupter_indices()) {
    dist = std::min(dist, (drone - true_positions[i]).norm() - scenario.objects[i].body_radius);
  }
  return dist;
}

double record_fov_margin(const Scenario& scenario, const Vec2& drone,
                         const std::vector<Vec2>& true_positions) {
  if (!scenario.dual_mode) return std::numeric_limits<double>::quiet_NaN();
  const auto targets = scenario.target_indices();
  const Vec2 u1 = true_positions[targets[0]] - drone;
  const Vec2 u2 = true_positions[targets[1]] - drone;
  if (u1.norm() < 1e-9 || u2.norm() < 1e-9) return std::numeric_limits<double>::quiet_NaN();
  const double angle =
      std::acos(std::clamp(u1.normalized().dot(u2.normalized()), -1.0, 1.0));
  return scenario.params.planner.fov - angle;
}

}  // namespace

RunResult run(const Scenario& scenario, double duration, std::uint64_t seed) {
  if (duration <= 0.0) throw std::invalid_argument("run: duration must be positive");
  const auto& sp = scenario.params;
  const double dt_c = 1.0 / sp.replan_rate;
  const int n_steps = static_cast<int>(std::round(duration * sp.replan_rate));
  const int n_sub = std::max(1, static_cast<int>(std::round(dt_c / sp.integration_step)));
  const int threads = worker_threads();

  std::vector<CubicSplinePath> paths;
  for (const auto& obj : scenario.objects) paths.emplace_back(obj.waypoints);
  const auto target_ids = scenario.target_indices();
  const auto interrupter_ids = scenario.interrupter_indices();

  std::vector<ReachableSetTrajectory> static_sets;
  for (const auto& o : scenario.obstacles) {
    static_sets.push_back(ReachableSetTrajectory::static_disk(o.center, o.radius, sp.horizon));
  }

  ProcessNoise noise;
  noise.accel_cov = sp.process_noise * Eigen::Matrix2d::Identity();

  RunResult result;
  result.control_period = dt_c;
  DroneState drone{scenario.drone_start, scenario.drone_start_velocity};
  std::optional<PiecewiseBernstein> prev_plan;

  for (int k = 0; k < n_steps; ++k) {
    const double t_now = k * dt_c;

    // Observe every object (true spline state plus Gaussian noise).
    std::vector<Vec2> true_pos(scenario.objects.size());
    std::vector<ObjectObservation> observations(scenario.objects.size());
    for (size_t i = 0; i < scenario.objects.size(); ++i) {
      true_pos[i] = paths[i].position(t_now);
      const Vec2 true_vel = paths[i].velocity(t_now);
      ObjectObservation obs;
      obs.body_radius = scenario.objects[i].body_radius;
      const double sigma = scenario.objects[i].noise_sigma;
      if (sigma > 0.0) {
        std::mt19937_64 rng(mix_seed(seed, 0xA11CEULL + k, i));
        std::normal_distribution<double> gauss(0.0, sigma);
        obs.position = true_pos[i] + Vec2(gauss(rng), gauss(rng));
        obs.velocity = true_vel + Vec2(gauss(rng), gauss(rng));
        obs.covariance = sigma * sigma * Eigen::Matrix4d::Identity();
      } else {
        obs.position = true_pos[i];
        obs.velocity = true_vel;
      }
      observations[i] = obs;
    }

    // Predict interrupters first, then targets against their sets.
    std::vector<ReachableSetTrajectory> step_sets(scenario.objects.size());
    auto predict_group = [&](const std::vector<int>& ids,
                             const std::vector<ReachableSetTrajectory>& obstacles) {
      auto one = [&](int idx) {
        PredictionParams pp;
        pp.horizon = sp.horizon;
        pp.n_samples = sp.n_samples;
        pp.primitive_degree = sp.primitive_degree;
        pp.outlier_ratio = sp.outlier_ratio;
        pp.seed = mix_seed(seed, 0x9E3779B9ULL + k, idx);
        return predict(observations[idx], noise, obstacles, pp);
      };
      if (threads > 1 && ids.size() > 1) {
        std::vector<std::future<ReachableSetTrajectory>> futures;
        for (int idx : ids)
          futures.push_back(std::async(std::launch::async, one, idx));
        for (size_t j = 0; j < ids.size(); ++j) step_sets[ids[j]] = futures[j].get();
      } else {
        for (int idx : ids) step_sets[idx] = one(idx);
      }
    };
    predict_group(interrupter_ids, static_sets);
    std::vector<ReachableSetTrajectory> planner_obstacles = static_sets;
    for (int idx : interrupter_ids) planner_obstacles.push_back(step_sets[idx]);
    predict_group(target_ids, planner_obstacles);

    PlanInput input;
    input.state = drone;
    input.previous_plan = prev_plan;
    for (int idx : target_ids) input.targets.push_back(step_sets[idx]);
    input.obstacles = planner_obstacles;
    const PlanResult planned = plan(input, sp.planner);

    TraceRecord rec;
    rec.time = t_now;
    rec.position = drone.position;
    rec.velocity = drone.velocity;
    rec.acceleration = planned.trajectory.derivative().derivative().evaluate(0.0);
    rec.plan_status = planned.status;
    rec.solve_time_ms = planned.diagnostics.solve_time_ms;
    rec.constraint_margin = planned.diagnostics.min_constraint_margin;
    for (size_t i = 0; i < scenario.objects.size(); ++i) {
      ObjectSnapshot snap;
      snap.true_position = true_pos[i];
      snap.predicted_center = step_sets[i].center_at(0.0);
      snap.predicted_radius = step_sets[i].radius_at(0.0);
      rec.objects.push_back(snap);
    }
    for (int idx : target_ids) {
      rec.target_distances.push_back((drone.position - true_pos[idx]).norm());
    }
    rec.min_obstacle_distance = record_min_obstacle_distance(scenario, drone.position, true_pos);
    rec.visibility_score = record_visibility_score(scenario, drone.position, true_pos);
    rec.fov_margin = record_fov_margin(scenario, drone.position, true_pos);
    result.records.push_back(std::move(rec));
    result.predictions.push_back(std::move(step_sets));
    result.plans.push_back(planned.trajectory);

    // Execute the plan kinematically over one control period.
    const PiecewiseBernstein vel_poly = planned.trajectory.derivative();
    const PiecewiseBernstein acc_poly = vel_poly.derivative();
    for (int s = 1; s <= n_sub; ++s) {
      const double tau = std::min(dt_c, s * sp.integration_step);
      FineSample fs;
      fs.time = t_now + tau;
      fs.position = planned.trajectory.evaluate(tau);
      fs.velocity = vel_poly.evaluate(tau);
      fs.acceleration = acc_poly.evaluate(tau);
      result.fine_path.push_back(fs);
    }
    drone.position = planned.trajectory.evaluate(dt_c);
    drone.velocity = vel_poly.evaluate(dt_c);
    prev_plan = shift_plan(planned.trajectory, dt_c);
  }
  return result;
}

MetricsSummary metrics(const RunResult& run, const Scenario& scenario) {
  if (run.records.empty()) throw std::invalid_argument("metrics: empty trace");
  MetricsSummary m;
  m.steps = static_cast<int>(run.records.size());
  const int n_targets = static_cast<int>(run.records.front().target_distances.size());
  m.min_target_distance.assign(n_targets, 1e9);
  m.mean_target_distance.assign(n_targets, 0.0);
  m.min_obstacle_clearance = 1e9;
  m.min_visibility_score = 1e9;
  m.min_fov_margin = scenario.dual_mode ? 1e9 : std::numeric_limits<double>::quiet_NaN();

  std::vector<double> solve_times;
  for (const auto& r : run.records) {
    for (int k = 0; k < n_targets; ++k) {
      m.min_target_distance[k] = std::min(m.min_target_distance[k], r.target_distances[k]);
      m.mean_target_distance[k] += r.target_distances[k];
    }
    m.min_obstacle_clearance = std::min(
        m.min_obstacle_clearance,
        r.min_obstacle_distance - scenario.params.planner.drone_radius);
    m.min_visibility_score = std::min(m.min_visibility_score, r.visibility_score);
    if (scenario.dual_mode) m.min_fov_margin = std::min(m.min_fov_margin, r.fov_margin);
    switch (r.plan_status) {
      case PlanStatus::Optimal: ++m.optimal_count; break;
      case PlanStatus::FallbackRelaxed: ++m.relaxed_count; break;
      case PlanStatus::FallbackPrevious: ++m.fallback_previous_count; break;
      case PlanStatus::FallbackStop: ++m.fallback_stop_count; break;
    }
    solve_times.push_back(r.solve_time_ms);
  }
  for (int k = 0; k < n_targets; ++k) m.mean_target_distance[k] /= m.steps;
  std::sort(solve_times.begin(), solve_times.end());
  auto quantile = [&](double q) {
    const int idx = std::min(static_cast<int>(solve_times.size()) - 1,
                             static_cast<int>(q * solve_times.size()));
    return solve_times[idx];
  };
  m.solve_ms_p50 = quantile(0.5);
  m.solve_ms_p90 = quantile(0.9);
  m.solve_ms_max = solve_times.back();
  return m;
}

OracleReport oracle_suite(const RunResult& run, const Scenario& scenario) {
  OracleReport rep;
  rep.worst_los_margin = 1e9;
  const auto target_ids = scenario.target_indices();
  const auto interrupter_ids = scenario.interrupter_indices();
  std::vector<CubicSplinePath> paths;
  for (const auto& obj : scenario.objects) paths.emplace_back(obj.waypoints);

  // (a) Line-of-sight from the drone to 64 boundary samples of each target's
  // predicted set vs every obstacle set (separated pairs only; occlusion of
  // an overlapping pair is unavoidable by construction).
  for (size_t k = 0; k < run.records.size(); ++k) {
    const Vec2 drone = run.records[k].position;
    const auto& sets = run.predictions[k];
    for (int ti : target_ids) {
      const Vec2 qc = sets[ti].center_at(0.0);
      const double qr = sets[ti].radius_at(0.0);
      std::vector<DiskSnapshot> occluders;
      for (const auto& o : scenario.obstacles) occluders.push_back({o.center, o.radius});
      for (int ii : interrupter_ids)
        occluders.push_back({sets[ii].center_at(0.0), sets[ii].radius_at(0.0)});
      if (scenario.dual_mode) {
        for (int tj : target_ids) {
          if (tj == ti) continue;
          occluders.push_back({sets[tj].center_at(0.0), sets[tj].radius_at(0.0)});
        }
      }
      for (const auto& occ : occluders) {
        if ((qc - occ.center).norm() <= qr + occ.radius) continue;  // overlapping pair
        for (int s = 0; s < 64; ++s) {
          const double ang = 2.0 * M_PI * s / 64;
          const Vec2 boundary = qc + qr * Vec2(std::cos(ang), std::sin(ang));
          const double clearance =
              segment_disk_clearance(drone, boundary, occ.center, occ.radius);
          ++rep.los_checks;
          rep.worst_los_margin = std::min(rep.worst_los_margin, clearance);
          if (clearance < 0.0) ++rep.los_violations;
        }
      }
    }
  }

  // (b) Containment of true positions inside the predicted reachable sets.
  const double horizon = scenario.params.horizon;
  for (size_t k = 0; k < run.predictions.size(); ++k) {
    const double t_now = run.records[k].time;
    for (size_t i = 0; i < scenario.objects.size(); ++i) {
      const auto& set = run.predictions[k][i];
      bool contained = true;
      for (int s = 1; s <= 50; ++s) {
        const double tau = horizon * s / 50.0;
        const Vec2 truth = paths[i].position(t_now + tau);
        if ((truth - set.center_at(tau)).norm() > set.radius_at(tau) + 1e-9) {
          contained = false;
          break;
        }
      }
      ++rep.containment_total;
      if (contained) ++rep.containment_pairs;
    }
  }
  rep.containment_rate =
      rep.containment_total > 0
          ? static_cast<double>(rep.containment_pairs) / rep.containment_total
          : 1.0;

  // (c) Dynamic limits by finite differences over the executed fine path.
  const auto& fp = run.fine_path;
  const double v_max = scenario.params.planner.v_max;
  const double a_max = scenario.params.planner.a_max;
  for (size_t i = 1; i + 1 < fp.size(); ++i) {
    const double dt1 = fp[i].time - fp[i - 1].time;
    const double dt2 = fp[i + 1].time - fp[i].time;
    if (std::abs(dt1 - dt2) > 1e-9) continue;  // irregular spacing at period end
    const Vec2 v_fd = (fp[i + 1].position - fp[i - 1].position) / (dt1 + dt2);
    const Vec2 a_fd =
        (fp[i + 1].position - 2.0 * fp[i].position + fp[i - 1].position) / (dt1 * dt2);
    rep.max_speed = std::max(rep.max_speed, v_fd.norm());
    rep.max_accel = std::max(rep.max_accel, a_fd.norm());
    if (v_fd.norm() > v_max + 1e-2 || a_fd.norm() > a_max + 5e-2) ++rep.dynamic_violations;
  }

  // C1 handoff between consecutive plans.
  for (size_t k = 0; k + 1 < run.plans.size(); ++k) {
    const Vec2 v_end = run.plans[k].derivative().evaluate(run.control_period);
    const Vec2 v_next = run.plans[k + 1].derivative().evaluate(0.0);
    rep.max_handoff_velocity_gap =
        std::max(rep.max_handoff_velocity_gap, (v_end - v_next).norm());
  }
  return rep;
}

namespace {

const char* status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::Optimal: return "optimal";
    case PlanStatus::FallbackRelaxed: return "relaxed";
    case PlanStatus::FallbackPrevious: return "fallback_previous";
    case PlanStatus::FallbackStop: return "fallback_stop";
  }
  return "unknown";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const std::string& path, const RunResult& run, const Scenario& scenario) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);

  std::vector<std::string> prefixes;
  int t_count = 0;
  int i_count = 0;
  for (const auto& obj : scenario.objects) {
    prefixes.push_back(obj.role == ObjectRole::Target ? "tgt" + std::to_string(t_count++)
                                                      : "int" + std::to_string(i_count++));
  }

  out << "time,px,py,vx,vy,ax,ay,plan_status,solve_ms,margin";
  for (const auto& p : prefixes) {
    out << "," << p << "_x," << p << "_y," << p << "_pred_cx," << p << "_pred_cy," << p
        << "_pred_r";
  }
  for (int k = 0; k < t_count; ++k) out << ",tgt" << k << "_dist";
  out << ",min_obstacle_dist,visibility_score,fov_margin\n";

  for (const auto& r : run.records) {
    out << format_double(r.time) << "," << format_double(r.position.x()) << ","
        << format_double(r.position.y()) << "," << format_double(r.velocity.x()) << ","
        << format_double(r.velocity.y()) << "," << format_double(r.acceleration.x()) << ","
        << format_double(r.acceleration.y()) << "," << status_name(r.plan_status) << ","
        << format_double(r.solve_time_ms) << "," << format_double(r.constraint_margin);
    for (const auto& snap : r.objects) {
      out << "," << format_double(snap.true_position.x()) << ","
          << format_double(snap.true_position.y()) << ","
          << format_double(snap.predicted_center.x()) << ","
          << format_double(snap.predicted_center.y()) << ","
          << format_double(snap.predicted_radius);
    }
    for (double d : r.target_distances) out << "," << format_double(d);
    out << "," << format_double(r.min_obstacle_distance) << ","
        << format_double(r.visibility_score) << "," << format_double(r.fov_margin) << "\n";
  }
}

std::string summary_to_json(const MetricsSummary& m, const OracleReport& o) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"steps\": " << m.steps << ",\n";
  out << "  \"min_target_distance\": [";
  for (size_t i = 0; i < m.min_target_distance.size(); ++i) {
    out << (i ? ", " : "") << m.min_target_distance[i];
  }
  out << "],\n  \"mean_target_distance\": [";
  for (size_t i = 0; i < m.mean_target_distance.size(); ++i) {
    out << (i ? ", " : "") << m.mean_target_distance[i];
  }
  out << "],\n";
  out << "  \"min_obstacle_clearance\": " << m.min_obstacle_clearance << ",\n";
  out << "  \"min_visibility_score\": " << m.min_visibility_score << ",\n";
  out << "  \"min_fov_margin\": " << (std::isnan(m.min_fov_margin) ? std::string("null")
                                                                   : std::to_string(m.min_fov_margin))
      << ",\n";
  out << "  \"plan_status_counts\": {\"optimal\": " << m.optimal_count
      << ", \"relaxed\": " << m.relaxed_count
      << ", \"fallback_previous\": " << m.fallback_previous_count
      << ", \"fallback_stop\": " << m.fallback_stop_count << "},\n";
  out << "  \"solve_ms\": {\"p50\": " << m.solve_ms_p50 << ", \"p90\": " << m.solve_ms_p90
      << ", \"max\": " << m.solve_ms_max << "},\n";
  out << "  \"oracle\": {\n";
  out << "    \"los_checks\": " << o.los_checks << ",\n";
  out << "    \"los_violations\": " << o.los_violations << ",\n";
  out << "    \"worst_los_margin\": " << o.worst_los_margin << ",\n";
  out << "    \"containment_rate\": " << o.containment_rate << ",\n";
  out << "    \"max_speed\": " << o.max_speed << ",\n";
  out << "    \"max_accel\": " << o.max_accel << ",\n";
  out << "    \"dynamic_violations\": " << o.dynamic_violations << ",\n";
  out << "    \"max_handoff_velocity_gap\": " << o.max_handoff_velocity_gap << "\n";
  out << "  }\n}\n";
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<std::string> verify_trace(const std::string& path, const Scenario* scenario) {
  std::vector<std::string> issues;
  std::ifstream in(path);
  if (!in) {
    issues.push_back("cannot open trace file: " + path);
    return issues;
  }
  std::string header;
  if (!std::getline(in, header)) {
    issues.push_back("empty trace file");
    return issues;
  }
  const auto cols = split_csv_line(header);
  auto col_index = [&](const std::string& name) {
    for (size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int c_time = col_index("time");
  const int c_px = col_index("px");
  const int c_py = col_index("py");
  if (c_time < 0 || c_px < 0 || c_py < 0) {
    issues.push_back("missing required columns time/px/py");
    return issues;
  }

  // Targets and interrupters present in the file, by column naming.
  std::vector<std::string> target_prefixes;
  std::vector<std::string> interrupter_prefixes;
  for (int k = 0;; ++k) {
    const std::string p = "tgt" + std::to_string(k);
    if (col_index(p + "_x") < 0) break;
    target_prefixes.push_back(p);
  }
  for (int k = 0;; ++k) {
    const std::string p = "int" + std::to_string(k);
    if (col_index(p + "_x") < 0) break;
    interrupter_prefixes.push_back(p);
  }

  double prev_time = -std::numeric_limits<double>::infinity();
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != cols.size()) {
      issues.push_back("row " + std::to_string(row) + ": wrong field count");
      continue;
    }
    auto value = [&](int idx) { return std::stod(f[idx]); };
    const double t = value(c_time);
    if (t <= prev_time) issues.push_back("row " + std::to_string(row) + ": time not increasing");
    prev_time = t;
    const Vec2 drone(value(c_px), value(c_py));

    std::vector<Vec2> target_pos;
    for (const auto& p : target_prefixes) {
      target_pos.emplace_back(value(col_index(p + "_x")), value(col_index(p + "_y")));
    }
    std::vector<Vec2> interrupter_pos;
    for (const auto& p : interrupter_prefixes) {
      interrupter_pos.emplace_back(value(col_index(p + "_x")), value(col_index(p + "_y")));
    }

    for (size_t k = 0; k < target_prefixes.size(); ++k) {
      const int c = col_index("tgt" + std::to_string(k) + "_dist");
      if (c < 0) continue;
      const double expect = (drone - target_pos[k]).norm();
      if (std::abs(expect - value(c)) > 1e-9) {
        issues.push_back("row " + std::to_string(row) + ": tgt" + std::to_string(k) +
                         "_dist mismatch");
      }
    }

    if (scenario != nullptr) {
      // Rebuild true-position list in scenario object order.
      std::vector<Vec2> true_pos(scenario->objects.size());
      size_t it = 0;
      size_t ii = 0;
      for (size_t i = 0; i < scenario->objects.size(); ++i) {
        true_pos[i] = scenario->objects[i].role == ObjectRole::Target ? target_pos[it++]
                                                                      : interrupter_pos[ii++];
      }
      const int c_obs = col_index("min_obstacle_dist");
      if (c_obs >= 0) {
        const double expect = record_min_obstacle_distance(*scenario, drone, true_pos);
        if (std::abs(expect - value(c_obs)) > 1e-9)
          issues.push_back("row " + std::to_string(row) + ": min_obstacle_dist mismatch");
      }
      const int c_vis = col_index("visibility_score");
      if (c_vis >= 0) {
        const double expect = record_visibility_score(*scenario, drone, true_pos);
        if (std::abs(expect - value(c_vis)) > 1e-9)
          issues.push_back("row " + std::to_string(row) + ": visibility_score mismatch");
      }
      const int c_fov = col_index("fov_margin");
      if (c_fov >= 0 && scenario->dual_mode) {
        const double expect = record_fov_margin(*scenario, drone, true_pos);
        if (std::abs(expect - value(c_fov)) > 1e-9)
          issues.push_back("row " + std::to_string(row) + ": fov_margin mismatch");
      }
    }
  }
  if (row == 0) issues.push_back("trace has no data rows");
  return issues;
}

}  // namespace qpchaser
