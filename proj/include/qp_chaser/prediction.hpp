#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qp_chaser/bernstein.hpp"

namespace qpchaser {

/// Observed state of a moving object at the current time.
struct ObjectObservation {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // [position; velocity] blocks
  double body_radius = 0.3;
};

/// Acceleration disturbance covariance of the constant-velocity model.
struct ProcessNoise {
  Eigen::Matrix2d accel_cov = Eigen::Matrix2d::Identity();
};

struct PredictionParams {
  double horizon = 1.5;
  int n_samples = 1000;
  int primitive_degree = 3;
  double outlier_ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Sampled endpoints with their motion primitives and the collision mask.
struct PrimitiveSet {
  Vec2 start_position = Vec2::Zero();
  Vec2 start_velocity = Vec2::Zero();
  double horizon = 0.0;
  int degree = 3;
  std::vector<Vec2> endpoints;
  std::vector<std::uint8_t> safe;

  int safe_count() const;
  /// Primitive i materialized as a planar Bernstein segment on [0, horizon].
  BernsteinSegment primitive(int i) const;
};

/// Moving disk enclosing an object's future positions: center trajectory plus
/// polynomial radius over [0, T].
struct ReachableSetTrajectory {
  PiecewiseBernstein center;  // 2 axes
  PiecewiseBernstein radius;  // scalar
  double body_radius = 0.0;
  bool fallback = false;

  static ReachableSetTrajectory static_disk(const Vec2& center, double radius, double horizon);

  Vec2 center_at(double t) const { return center.evaluate(t); }
  double radius_at(double t) const { return radius.evaluate_scalar(t); }
};

/// Closed-form covariance propagation of the constant-velocity model.
Eigen::Matrix4d propagate_covariance(const Eigen::Matrix4d& p0, const Eigen::Matrix2d& q, double t);

/// N draws from the propagated endpoint distribution; deterministic per seed.
std::vector<Vec2> sample_endpoints(const ObjectObservation& obs, const ProcessNoise& noise,
                                   double horizon, int n_samples, std::uint64_t seed);

/// Zero-jerk primitive from (p0, v0) to endpoint s, expressed at degree n_p.
BernsteinSegment min_jerk_primitive(const Vec2& p0, const Vec2& v0, const Vec2& endpoint,
                                    double horizon, int degree);

/// Builds the primitive set for an observation (all marked safe).
PrimitiveSet build_primitives(const ObjectObservation& obs, const ProcessNoise& noise,
                              const PredictionParams& params);

/// Marks primitives unsafe whose clearance certificate against any obstacle
/// fails (coefficient-wise test; conservative).
void collision_filter(PrimitiveSet& prims, const std::vector<ReachableSetTrajectory>& obstacles,
                      double body_radius);

/// Index of the safe primitive minimizing the sum of endpoint distances to
/// the other safe primitives; ties break to the lowest index. Returns -1 when
/// no primitive is safe.
int select_center(const PrimitiveSet& prims);

/// Enclosing radius r(t) = max_j ||s_center - s_j|| t^2/T^2 + body_radius as a
/// degree-2 segment over the safe set.
BernsteinSegment compute_radius(const PrimitiveSet& prims, int center_index, double body_radius);

/// Drops the ceil(ratio * |safe|) safe primitives farthest (by endpoint) from
/// the center primitive's endpoint.
void trim_outliers(PrimitiveSet& prims, int center_index, double ratio);

/// Full prediction pipeline; falls back to a constant-velocity tube when no
/// primitive survives filtering.
ReachableSetTrajectory predict(const ObjectObservation& obs, const ProcessNoise& noise,
                               const std::vector<ReachableSetTrajectory>& obstacles,
                               const PredictionParams& params);

}  // namespace qpchaser
