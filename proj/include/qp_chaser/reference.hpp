#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qp_chaser/visibility.hpp"

namespace qpchaser {

/// Analytic distance from a point to a disk boundary, clamped at zero inside.
double edf(const Vec2& point, const Vec2& disk_center, double disk_radius);

/// Minimum EDF along the drone-target segment (line-of-sight clearance).
double visibility_score(const Vec2& drone, const Vec2& target, const Vec2& disk_center,
                        double disk_radius);

/// Snapshot of one obstacle disk at a fixed time.
struct DiskState {
  Vec2 center;
  double radius = 0.0;
};

/// Standoff point on the r_d circle around the target, angularly averaged
/// over per-obstacle best-visibility directions with the given weights.
/// With no obstacles the bearing `fallback_dir` (unit vector) is held.
Vec2 single_ref(const Vec2& target, const std::vector<DiskState>& obstacles,
                const std::vector<OClass>& classes, const std::vector<double>& weights,
                double standoff, const Vec2& fallback_dir);

struct DualCircle {
  Vec2 center;
  double radius = 0.0;
};

/// Circle of viewpoints placing the two targets at screen ratio 1:gamma:1.
DualCircle dual_ref_circle(const Vec2& q1, const Vec2& q2, double theta_f, double gamma,
                           FClass cls);

/// Point on the dual circle blending per-obstacle visibility directions (both
/// targets) with the mutual-visibility direction weighted w_m.
Vec2 dual_ref(const Vec2& q1, const Vec2& q2, const std::vector<DiskState>& obstacles,
              const std::vector<OClass>& classes_t1, const std::vector<OClass>& classes_t2,
              const std::vector<double>& weights_t1, const std::vector<double>& weights_t2,
              double theta_f, double gamma, FClass cls, double w_m);

/// Inverse-distance weight with a floor guarding the division.
double reference_weight(double distance, double floor = 0.1);

}  // namespace qpchaser
