#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qp_chaser/planner.hpp"
#include "qp_chaser/prediction.hpp"
#include "qp_chaser/sim.hpp"

namespace fs = std::filesystem;
using namespace qpchaser;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitOracle = 4;

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int cmd_run(const std::string& scenario_file, double duration, std::int64_t seed_flag,
            const std::string& out_dir) {
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_file);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kExitValidation;
  }
  const std::uint64_t seed =
      seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : scenario.params.seed;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << out_dir << ": " << ec.message() << "\n";
    return kExitValidation;
  }

  const RunResult result = run(scenario, duration, seed);
  const MetricsSummary summary = metrics(result, scenario);
  const OracleReport oracle = oracle_suite(result, scenario);

  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), result, scenario);
  std::ofstream json((fs::path(out_dir) / "summary.json").string());
  json << summary_to_json(summary, oracle);
  json.close();

  std::cout << "scenario " << scenario.name << ": " << summary.steps << " steps, "
            << "min visibility " << summary.min_visibility_score << " m, min clearance "
            << summary.min_obstacle_clearance << " m, solve p50 " << summary.solve_ms_p50
            << " ms\n";
  std::cout << "oracle: " << oracle.los_violations << " LoS violations, containment "
            << oracle.containment_rate << ", max speed " << oracle.max_speed << " m/s\n";

  const bool occluded = summary.min_visibility_score <= 0.0;
  const bool collided = summary.min_obstacle_clearance < 0.0;
  const bool fov_lost = scenario.dual_mode && summary.min_fov_margin < 0.0;
  if (occluded || collided || fov_lost || !oracle.clean(scenario.params.planner.v_max,
                                                        scenario.params.planner.a_max)) {
    std::cerr << "oracle violation detected\n";
    return kExitOracle;
  }
  return kExitOk;
}

int cmd_verify(const std::string& trace_file, const std::string& scenario_file) {
  Scenario scenario;
  const Scenario* scenario_ptr = nullptr;
  if (!scenario_file.empty()) {
    try {
      scenario = load_scenario(scenario_file);
      scenario_ptr = &scenario;
    } catch (const ScenarioError& e) {
      std::cerr << "scenario error: " << e.what() << "\n";
      return kExitValidation;
    }
  }
  if (!fs::exists(trace_file)) {
    std::cerr << "trace file not found: " << trace_file << "\n";
    return kExitValidation;
  }
  const auto issues = verify_trace(trace_file, scenario_ptr);
  if (issues.empty()) {
    std::cout << "trace ok\n";
    return kExitOk;
  }
  for (const auto& issue : issues) std::cerr << issue << "\n";
  return kExitOracle;
}

/// Timing grid in the shape of the prediction benchmark: sampling+primitive
/// generation, collision check, and reachable-set computation per workload.
int cmd_bench_prediction(const std::string& out_dir) {
  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    csv.open((fs::path(out_dir) / "bench_prediction.csv").string());
    csv << "n_samples,n_obstacles,sample_us,filter_us,reachable_ms,total_ms\n";
  }
  std::cout << "prediction benchmark (median of 50 reps)\n";
  std::cout << "n_samp n_obs  sample[us]  filter[us]  reachable[ms]  total[ms]\n";
  for (int n_samp : {500, 2000}) {
    for (int n_obs : {2, 4}) {
      ObjectObservation obs;
      obs.position = Vec2(0, 0);
      obs.velocity = Vec2(1.0, 0.3);
      obs.covariance = 0.01 * Eigen::Matrix4d::Identity();
      obs.body_radius = 0.3;
      ProcessNoise noise;
      noise.accel_cov = Eigen::Matrix2d::Identity();
      std::vector<ReachableSetTrajectory> obstacles;
      for (int j = 0; j < n_obs; ++j) {
        const double ang = 2.0 * M_PI * j / n_obs + 0.4;
        obstacles.push_back(ReachableSetTrajectory::static_disk(
            Vec2(2.8 * std::cos(ang), 2.8 * std::sin(ang)), 0.5, 1.5));
      }
      PredictionParams params;
      params.horizon = 1.5;
      params.n_samples = n_samp;

      std::vector<double> t_sample, t_filter, t_reach;
      for (int rep = 0; rep < 50; ++rep) {
        params.seed = rep;
        const double t0 = now_ms();
        PrimitiveSet prims = build_primitives(obs, noise, params);
        const double t1 = now_ms();
        collision_filter(prims, obstacles, obs.body_radius);
        const double t2 = now_ms();
        const int center = select_center(prims);
        if (center >= 0) compute_radius(prims, center, obs.body_radius);
        const double t3 = now_ms();
        t_sample.push_back(t1 - t0);
        t_filter.push_back(t2 - t1);
        t_reach.push_back(t3 - t2);
      }
      auto median = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
      };
      const double sample_us = median(t_sample) * 1000.0;
      const double filter_us = median(t_filter) * 1000.0;
      const double reach_ms = median(t_reach);
      const double total_ms = sample_us / 1000.0 + filter_us / 1000.0 + reach_ms;
      std::printf("%6d %5d  %10.1f  %10.1f  %13.3f  %9.3f\n", n_samp, n_obs, sample_us,
                  filter_us, reach_ms, total_ms);
      if (csv.is_open()) {
        csv << n_samp << "," << n_obs << "," << sample_us << "," << filter_us << ","
            << reach_ms << "," << total_ms << "\n";
      }
    }
  }
  return kExitOk;
}

/// QP benchmark over the degree / segment-count / obstacle-count grid, for
/// single- and dual-target problems.
int cmd_bench_qp(const std::string& out_dir) {
  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    csv.open((fs::path(out_dir) / "bench_qp.csv").string());
    csv << "mode,n_c,segments,n_obstacles,solve_ms\n";
  }

  auto build_input = [&](bool dual, int n_obs, double horizon) {
    PlanInput input;
    input.state.position = Vec2(0.0, -4.0);
    input.state.velocity = Vec2(0.3, 0.0);
    auto make_target = [&](const Vec2& from, const Vec2& to) {
      Eigen::MatrixXd c(2, 2);
      c.row(0) = from.transpose();
      c.row(1) = to.transpose();
      Eigen::MatrixXd r(3, 1);
      r << 0.3, 0.3, 0.9;
      ReachableSetTrajectory set;
      set.center = PiecewiseBernstein::single(BernsteinSegment(0.0, horizon, c));
      set.radius = PiecewiseBernstein::single(BernsteinSegment(0.0, horizon, r));
      set.body_radius = 0.3;
      return set;
    };
    input.targets.push_back(make_target(Vec2(-0.6, 0), Vec2(0.4, 0.3)));
    if (dual) input.targets.push_back(make_target(Vec2(1.4, 0), Vec2(1.0, 0.4)));
    for (int j = 0; j < n_obs; ++j) {
      const double ang = M_PI * (0.15 + 0.7 * j / std::max(1, n_obs - 1));
      input.obstacles.push_back(ReachableSetTrajectory::static_disk(
          Vec2(3.0 * std::cos(ang), 1.2 + 2.2 * std::sin(ang)), 0.5, horizon));
    }
    return input;
  };

  std::cout << "QP benchmark (median solve time [ms] of 21 reps)\n";
  std::cout << "mode    n_c  M\\N_o";
  for (int n = 1; n <= 4; ++n) std::cout << "      " << n;
  std::cout << "\n";
  for (const bool dual : {false, true}) {
    const int max_obs = dual ? 3 : 4;
    for (int n_c : {4, 5, 6}) {
      for (int segs = 1; segs <= 5; ++segs) {
        std::printf("%-7s %3d  M=%d ", dual ? "dual" : "single", n_c, segs);
        for (int n_obs = 1; n_obs <= max_obs; ++n_obs) {
          const double horizon = 1.5;
          PlannerParams params;
          params.horizon = horizon;
          params.traj_degree = n_c;
          const PlanInput input = build_input(dual, n_obs, horizon);

          // Uniform synthetic segmentation pins the QP size independent of
          // the root structure.
          SegmentationResult seg;
          for (int m = 0; m <= segs; ++m) seg.knots.push_back(horizon * m / segs);
          for (int k = 0; k < static_cast<int>(input.targets.size()); ++k) {
            for (int j = 0; j < n_obs; ++j) seg.pairs.push_back({k, j, false});
          }
          if (dual) {
            seg.pairs.push_back({0, 1, true});
            seg.pairs.push_back({1, 0, true});
          }
          seg.separated.assign(seg.pairs.size(), std::vector<std::uint8_t>(segs, 1));
          for (size_t p = 0; p < seg.pairs.size(); ++p) {
            const auto& key = seg.pairs[p];
            const auto& obst =
                key.obstacle_is_target ? input.targets[key.obstacle] : input.obstacles[key.obstacle];
            for (int m = 0; m < segs; ++m) {
              const double mid = 0.5 * (seg.knots[m] + seg.knots[m + 1]);
              const double gap =
                  (input.targets[key.target].center_at(mid) - obst.center_at(mid)).norm() -
                  (input.targets[key.target].radius_at(mid) + obst.radius_at(mid));
              seg.separated[p][m] = gap > 0.0 ? 1 : 0;
            }
          }

          const AssembledProblem problem = assemble_problem(input, params, seg);
          std::vector<double> times;
          for (int rep = 0; rep < 21; ++rep) {
            const double t0 = now_ms();
            solve_qp(problem.qp);
            times.push_back(now_ms() - t0);
          }
          std::sort(times.begin(), times.end());
          const double med = times[times.size() / 2];
          std::printf(" %6.2f", med);
          if (csv.is_open()) {
            csv << (dual ? "dual" : "single") << "," << n_c << "," << segs << "," << n_obs
                << "," << med << "\n";
          }
        }
        std::printf("\n");
      }
    }
  }
  return kExitOk;
}

int cmd_plot_data(const std::string& trace_file, const std::string& out_dir) {
  std::ifstream in(trace_file);
  if (!in) {
    std::cerr << "trace file not found: " << trace_file << "\n";
    return kExitValidation;
  }
  fs::create_directories(out_dir);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto col = [&](const std::string& name) {
    for (size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  std::vector<int> dist_cols;
  for (int k = 0;; ++k) {
    const int c = col("tgt" + std::to_string(k) + "_dist");
    if (c < 0) break;
    dist_cols.push_back(c);
  }
  const int c_time = col("time");
  const int c_obs = col("min_obstacle_dist");
  const int c_vis = col("visibility_score");
  const int c_fov = col("fov_margin");
  if (c_time < 0 || c_vis < 0) {
    std::cerr << "trace is missing required columns\n";
    return kExitValidation;
  }

  std::ofstream distances((fs::path(out_dir) / "distances.csv").string());
  distances << "time";
  for (size_t k = 0; k < dist_cols.size(); ++k) distances << ",target" << k << "_distance";
  distances << ",min_obstacle_distance\n";
  std::ofstream visibility((fs::path(out_dir) / "visibility.csv").string());
  visibility << "time,visibility_score,fov_margin\n";

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string v;
    while (std::getline(ss, v, ',')) f.push_back(v);
    distances << f[c_time];
    for (int c : dist_cols) distances << "," << f[c];
    distances << "," << (c_obs >= 0 ? f[c_obs] : "") << "\n";
    visibility << f[c_time] << "," << f[c_vis] << "," << (c_fov >= 0 ? f[c_fov] : "") << "\n";
  }
  std::cout << "wrote " << out_dir << "/distances.csv and " << out_dir << "/visibility.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qpchaser: reachable-set prediction and visibility-constrained chasing"};
  app.require_subcommand(1);

  std::string scenario_file, trace_file, out_dir = "out", suite, verify_scenario;
  double duration = 30.0;
  std::int64_t seed = -1;

  auto* run_cmd = app.add_subcommand("run", "run a scenario closed loop");
  run_cmd->add_option("--scenario", scenario_file, "scenario JSON file")->required();
  run_cmd->add_option("--duration", duration, "simulated seconds (default 30)");
  run_cmd->add_option("--seed", seed, "override the scenario seed");
  run_cmd->add_option("--out", out_dir, "output directory (default ./out)");

  auto* verify_cmd = app.add_subcommand("verify", "recompute a trace's derived columns");
  verify_cmd->add_option("--trace", trace_file, "trace CSV file")->required();
  verify_cmd->add_option("--scenario", verify_scenario,
                         "scenario JSON (enables obstacle/visibility checks)");

  auto* bench_cmd = app.add_subcommand("bench", "timing grids");
  bench_cmd->add_option("--suite", suite, "prediction or qp")->required();
  bench_cmd->add_option("--out", out_dir, "optional CSV output directory");

  auto* plot_cmd = app.add_subcommand("plot-data", "per-figure CSV extracts from a trace");
  plot_cmd->add_option("--trace", trace_file, "trace CSV file")->required();
  plot_cmd->add_option("--out", out_dir, "output directory (default ./out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(scenario_file, duration, seed, out_dir);
    if (verify_cmd->parsed()) return cmd_verify(trace_file, verify_scenario);
    if (bench_cmd->parsed()) {
      if (suite == "prediction") return cmd_bench_prediction(out_dir);
      if (suite == "qp") return cmd_bench_qp(out_dir);
      std::cerr << "unknown bench suite: " << suite << " (expected prediction or qp)\n";
      return kExitUsage;
    }
    if (plot_cmd->parsed()) return cmd_plot_data(trace_file, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
