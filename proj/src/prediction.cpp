#include "qp_chaser/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qp_chaser/kernels.hpp"

namespace qpchaser {

namespace {

void require_psd(const Eigen::MatrixXd& m, const char* what) {
  if (!m.isApprox(m.transpose(), 1e-9))
    throw std::invalid_argument(std::string(what) + ": not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::invalid_argument(std::string(what) + ": not positive semi-definite");
}

Eigen::Matrix2d position_block(const Eigen::Matrix4d& p) { return p.topLeftCorner<2, 2>(); }

}  // namespace

int PrimitiveSet::safe_count() const {
  return static_cast<int>(std::count(safe.begin(), safe.end(), std::uint8_t{1}));
}

BernsteinSegment PrimitiveSet::primitive(int i) const {
  return min_jerk_primitive(start_position, start_velocity, endpoints.at(i), horizon, degree);
}

ReachableSetTrajectory ReachableSetTrajectory::static_disk(const Vec2& center, double radius,
                                                           double horizon) {
  ReachableSetTrajectory r;
  r.center = PiecewiseBernstein::single(BernsteinSegment::constant(0.0, horizon, center));
  r.radius = PiecewiseBernstein::single(BernsteinSegment::constant_scalar(0.0, horizon, radius));
  r.body_radius = radius;
  return r;
}

Eigen::Matrix4d propagate_covariance(const Eigen::Matrix4d& p0, const Eigen::Matrix2d& q,
                                     double t) {
  if (t < 0.0) throw std::invalid_argument("propagate_covariance: t must be >= 0");
  require_psd(p0, "propagate_covariance: P0");
  require_psd(q, "propagate_covariance: Q");

  Eigen::Matrix4d phi = Eigen::Matrix4d::Identity();
  phi.topRightCorner<2, 2>() = t * Eigen::Matrix2d::Identity();

  Eigen::Matrix4d noise = Eigen::Matrix4d::Zero();
  noise.topLeftCorner<2, 2>() = (t * t * t / 3.0) * q;
  noise.topRightCorner<2, 2>() = (t * t / 2.0) * q;
  noise.bottomLeftCorner<2, 2>() = (t * t / 2.0) * q;
  noise.bottomRightCorner<2, 2>() = t * q;

  return phi * p0 * phi.transpose() + noise;
}

std::vector<Vec2> sample_endpoints(const ObjectObservation& obs, const ProcessNoise& noise,
                                   double horizon, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("sample_endpoints: n_samples >= 1 required");
  const Vec2 mean = obs.position + horizon * obs.velocity;
  const Eigen::Matrix2d cov =
      position_block(propagate_covariance(obs.covariance, noise.accel_cov, horizon));

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Eigen::Vector2d clamped = es.eigenvalues().cwiseMax(0.0);
  const Eigen::Matrix2d sqrt_cov = es.eigenvectors() * clamped.cwiseSqrt().asDiagonal() *
                                   es.eigenvectors().transpose();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec2> endpoints;
  endpoints.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double z0 = gauss(rng);
    const double z1 = gauss(rng);
    endpoints.push_back(mean + sqrt_cov * Vec2(z0, z1));
  }
  return endpoints;
}

BernsteinSegment min_jerk_primitive(const Vec2& p0, const Vec2& v0, const Vec2& endpoint,
                                    double horizon, int degree) {
  if (degree < 3) throw std::invalid_argument("min_jerk_primitive: degree >= 3 required");
  Eigen::MatrixXd cubic(4, 2);
  cubic.row(0) = p0.transpose();
  cubic.row(1) = (p0 + v0 * horizon / 3.0).transpose();
  cubic.row(2) = (2.0 / 3.0 * p0 + endpoint / 3.0 + v0 * horizon / 3.0).transpose();
  cubic.row(3) = endpoint.transpose();
  return BernsteinSegment(0.0, horizon, cubic).elevated(degree);
}

PrimitiveSet build_primitives(const ObjectObservation& obs, const ProcessNoise& noise,
                              const PredictionParams& params) {
  PrimitiveSet set;
  set.start_position = obs.position;
  set.start_velocity = obs.velocity;
  set.horizon = params.horizon;
  set.degree = params.primitive_degree;
  set.endpoints = sample_endpoints(obs, noise, params.horizon, params.n_samples, params.seed);
  set.safe.assign(set.endpoints.size(), 1);
  return set;
}

namespace {

bool obstacle_is_static_disk(const ReachableSetTrajectory& obs) {
  return obs.center.num_segments() == 1 && obs.center.segment(0).degree() == 0 &&
         obs.radius.num_segments() == 1 && obs.radius.segment(0).degree() == 0;
}

/// Generic certificate for one primitive piece vs one obstacle piece.
bool piece_clear(const BernsteinSegment& prim, const BernsteinSegment& obs_center,
                 const BernsteinSegment& obs_radius, double body_radius) {
  const int deg = std::max({prim.degree(), obs_center.degree()});
  const BernsteinSegment pe = prim.elevated(deg);
  const BernsteinSegment oe = obs_center.elevated(deg);
  const double t0 = prim.start_time();
  const double t1 = prim.end_time();
  const BernsteinSegment dx(t0, t1, pe.control_points().col(0) - oe.control_points().col(0));
  const BernsteinSegment dy(t0, t1, pe.control_points().col(1) - oe.control_points().col(1));
  BernsteinSegment rsum(t0, t1,
                        obs_radius.control_points().col(0).array() + body_radius);
  const BernsteinSegment dist2 = multiply(dx, dx);
  const BernsteinSegment dist2y = multiply(dy, dy);
  const BernsteinSegment rad2 = multiply(rsum, rsum);
  const int out_deg = std::max(dist2.degree(), rad2.degree());
  const Eigen::VectorXd coeffs = dist2.elevated(out_deg).control_points().col(0) +
                                 dist2y.elevated(out_deg).control_points().col(0) -
                                 rad2.elevated(out_deg).control_points().col(0);
  return (coeffs.array() >= 0.0).all();
}

}  // namespace

void collision_filter(PrimitiveSet& prims, const std::vector<ReachableSetTrajectory>& obstacles,
                      double body_radius) {
  if (obstacles.empty()) return;
  const int n = static_cast<int>(prims.endpoints.size());

  for (const auto& obs : obstacles) {
    if (obstacle_is_static_disk(obs) && prims.degree == 3) {
      // Hot path: SIMD batch certificate against a static disk.
      const Vec2 o = obs.center.segment(0).control_points().row(0).transpose();
      const double r = obs.radius.segment(0).control_points()(0, 0) + body_radius;
      std::vector<double> sx(n), sy(n), min_coeff(n);
      for (int i = 0; i < n; ++i) {
        sx[i] = prims.endpoints[i].x();
        sy[i] = prims.endpoints[i].y();
      }
      kernels::StaticClearanceBatch batch;
      const Vec2 a0 = prims.start_position - o;
      const Vec2 a1 = prims.start_position + prims.start_velocity * prims.horizon / 3.0 - o;
      const Vec2 g = 2.0 / 3.0 * prims.start_position + prims.start_velocity * prims.horizon / 3.0 - o;
      batch.a0x = a0.x();
      batch.a1x = a1.x();
      batch.gx = g.x();
      batch.a0y = a0.y();
      batch.a1y = a1.y();
      batch.gy = g.y();
      batch.ox = o.x();
      batch.oy = o.y();
      batch.r2 = r * r;
      batch.sx = sx.data();
      batch.sy = sy.data();
      batch.n = n;
      kernels::min_clearance_coeffs(batch, min_coeff.data());
      for (int i = 0; i < n; ++i) {
        if (prims.safe[i] && min_coeff[i] < 0.0) prims.safe[i] = 0;
      }
      continue;
    }
    // Generic path: arbitrary obstacle center/radius polynomials.
    for (int i = 0; i < n; ++i) {
      if (!prims.safe[i]) continue;
      const BernsteinSegment prim = prims.primitive(i);
      bool clear = true;
      for (int m = 0; m < obs.center.num_segments() && clear; ++m) {
        const auto& cseg = obs.center.segment(m);
        const BernsteinSegment piece = prim.restricted(cseg.start_time(), cseg.end_time());
        const BernsteinSegment rado = obs.radius.restricted(cseg.start_time(), cseg.end_time());
        clear = piece_clear(piece, cseg, rado, body_radius);
      }
      if (!clear) prims.safe[i] = 0;
    }
  }
}

int select_center(const PrimitiveSet& prims) {
  std::vector<int> safe_ids;
  for (int i = 0; i < static_cast<int>(prims.endpoints.size()); ++i) {
    if (prims.safe[i]) safe_ids.push_back(i);
  }
  if (safe_ids.empty()) return -1;
  const int m = static_cast<int>(safe_ids.size());
  std::vector<double> x(m), y(m), sums(m);
  for (int k = 0; k < m; ++k) {
    x[k] = prims.endpoints[safe_ids[k]].x();
    y[k] = prims.endpoints[safe_ids[k]].y();
  }
  kernels::pairwise_distance_sums(x.data(), y.data(), m, sums.data());
  const double best = *std::min_element(sums.begin(), sums.end());
  const double tol = 1e-9 * (1.0 + std::abs(best));
  for (int k = 0; k < m; ++k) {
    if (sums[k] <= best + tol) return safe_ids[k];
  }
  return safe_ids[0];
}

BernsteinSegment compute_radius(const PrimitiveSet& prims, int center_index, double body_radius) {
  const Vec2 c = prims.endpoints.at(center_index);
  double d_max = 0.0;
  for (int i = 0; i < static_cast<int>(prims.endpoints.size()); ++i) {
    if (!prims.safe[i]) continue;
    d_max = std::max(d_max, (prims.endpoints[i] - c).norm());
  }
  Eigen::MatrixXd coeffs(3, 1);
  coeffs << body_radius, body_radius, body_radius + d_max;
  return BernsteinSegment(0.0, prims.horizon, coeffs);
}

void trim_outliers(PrimitiveSet& prims, int center_index, double ratio) {
  if (ratio < 0.0 || ratio >= 1.0) throw std::invalid_argument("trim_outliers: ratio in [0,1)");
  if (ratio == 0.0) return;
  const Vec2 c = prims.endpoints.at(center_index);
  std::vector<std::pair<double, int>> dist_idx;
  for (int i = 0; i < static_cast<int>(prims.endpoints.size()); ++i) {
    if (prims.safe[i]) dist_idx.emplace_back((prims.endpoints[i] - c).norm(), i);
  }
  const int k = static_cast<int>(std::ceil(ratio * static_cast<double>(dist_idx.size())));
  std::sort(dist_idx.begin(), dist_idx.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (int j = 0; j < k && j < static_cast<int>(dist_idx.size()); ++j) {
    if (dist_idx[j].second == center_index) continue;  // keep the center primitive
    prims.safe[dist_idx[j].second] = 0;
  }
}

namespace {

ReachableSetTrajectory fallback_prediction(const ObjectObservation& obs, const ProcessNoise& noise,
                                           const PredictionParams& params) {
  const double T = params.horizon;
  Eigen::MatrixXd line(2, 2);
  line.row(0) = obs.position.transpose();
  line.row(1) = (obs.position + T * obs.velocity).transpose();

  auto sigma = [&](double t) {
    const Eigen::Matrix2d p =
        position_block(propagate_covariance(obs.covariance, noise.accel_cov, t));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(p);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  };
  Eigen::MatrixXd samples(3, 1);
  samples << obs.body_radius + 3.0 * sigma(0.0), obs.body_radius + 3.0 * sigma(T / 2.0),
      obs.body_radius + 3.0 * sigma(T);

  ReachableSetTrajectory out;
  out.center = PiecewiseBernstein::single(BernsteinSegment(0.0, T, line));
  out.radius = PiecewiseBernstein::single(interpolate_to_bernstein(samples, 0.0, T));
  out.body_radius = obs.body_radius;
  out.fallback = true;
  return out;
}

}  // namespace

ReachableSetTrajectory predict(const ObjectObservation& obs, const ProcessNoise& noise,
                               const std::vector<ReachableSetTrajectory>& obstacles,
                               const PredictionParams& params) {
  PrimitiveSet prims = build_primitives(obs, noise, params);
  collision_filter(prims, obstacles, obs.body_radius);
  int center = select_center(prims);
  if (center < 0) return fallback_prediction(obs, noise, params);
  if (params.outlier_ratio > 0.0) {
    trim_outliers(prims, center, params.outlier_ratio);
  }
  ReachableSetTrajectory out;
  out.center = PiecewiseBernstein::single(prims.primitive(center));
  out.radius = PiecewiseBernstein::single(compute_radius(prims, center, obs.body_radius));
  out.body_radius = obs.body_radius;
  return out;
}

}  // namespace qpchaser
