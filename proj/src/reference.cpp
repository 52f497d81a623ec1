#include "qp_chaser/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace qpchaser {

double edf(const Vec2& point, const Vec2& disk_center, double disk_radius) {
  return std::max(0.0, (point - disk_center).norm() - disk_radius);
}

double visibility_score(const Vec2& drone, const Vec2& target, const Vec2& disk_center,
                        double disk_radius) {
  const Vec2 d = target - drone;
  const double len2 = d.squaredNorm();
  if (len2 < 1e-18) throw std::invalid_argument("visibility_score: coincident endpoints");
  const double u = std::clamp((disk_center - drone).dot(d) / len2, 0.0, 1.0);
  const Vec2 closest = drone + u * d;
  return edf(closest, disk_center, disk_radius);
}

namespace {

/// Unit direction of the max-visibility standoff point: the obstacle-to-target
/// bearing rotated -pi/2 for class O1, +pi/2 for O2.
Vec2 standoff_direction(const Vec2& target, const Vec2& obstacle, OClass cls) {
  const Vec2 d = target - obstacle;
  const double n = d.norm();
  if (n < 1e-12) return Vec2(1.0, 0.0);
  const Vec2 u = d / n;
  return cls == OClass::O1 ? Vec2(u.y(), -u.x()) : Vec2(-u.y(), u.x());
}

}  // namespace

double reference_weight(double distance, double floor) {
  return 1.0 / std::max(distance, floor);
}

Vec2 single_ref(const Vec2& target, const std::vector<DiskState>& obstacles,
                const std::vector<OClass>& classes, const std::vector<double>& weights,
                double standoff, const Vec2& fallback_dir) {
  if (obstacles.empty()) return target + standoff * fallback_dir;
  if (obstacles.size() != classes.size() || obstacles.size() != weights.size())
    throw std::invalid_argument("single_ref: size mismatch");
  Vec2 acc = Vec2::Zero();
  double wsum = 0.0;
  for (size_t i = 0; i < obstacles.size(); ++i) {
    acc += weights[i] * (target + standoff * standoff_direction(target, obstacles[i].center,
                                                                classes[i]));
    wsum += weights[i];
  }
  return acc / wsum;
}

DualCircle dual_ref_circle(const Vec2& q1, const Vec2& q2, double theta_f, double gamma,
                           FClass cls) {
  if (gamma <= 0.0) throw std::invalid_argument("dual_ref_circle: gamma must be positive");
  const Vec2 d = q2 - q1;
  const double half = theta_f / 2.0;
  const double cot_half = std::cos(half) / std::sin(half);
  const double tan_half = std::tan(half);
  const double ratio = gamma / (gamma + 2.0);
  const double base = (gamma + 2.0) / (4.0 * gamma) * cot_half;
  const double k1 = base * (1.0 - ratio * ratio * tan_half * tan_half);
  const double k2 = base * (1.0 + ratio * ratio * tan_half * tan_half);
  const Vec2 rotated(d.y(), -d.x());
  const double sign = (cls == FClass::F1) ? 1.0 : -1.0;
  DualCircle c;
  c.center = 0.5 * (q1 + q2) + sign * k1 * rotated;
  c.radius = k2 * d.norm();
  return c;
}

Vec2 dual_ref(const Vec2& q1, const Vec2& q2, const std::vector<DiskState>& obstacles,
              const std::vector<OClass>& classes_t1, const std::vector<OClass>& classes_t2,
              const std::vector<double>& weights_t1, const std::vector<double>& weights_t2,
              double theta_f, double gamma, FClass cls, double w_m) {
  const DualCircle circle = dual_ref_circle(q1, q2, theta_f, gamma, cls);

  // Mutual-visibility direction: target chord rotated to the class side.
  const Vec2 chord = q2 - q1;
  const double n = chord.norm();
  Vec2 mutual(1.0, 0.0);
  if (n > 1e-12) {
    const Vec2 u = chord / n;
    mutual = (cls == FClass::F1) ? Vec2(u.y(), -u.x()) : Vec2(-u.y(), u.x());
  }

  Vec2 blend = w_m * mutual;
  for (size_t i = 0; i < obstacles.size(); ++i) {
    blend += weights_t1[i] * standoff_direction(q1, obstacles[i].center, classes_t1[i]);
    blend += weights_t2[i] * standoff_direction(q2, obstacles[i].center, classes_t2[i]);
  }
  if (blend.norm() < 1e-12) blend = mutual;
  return circle.center + circle.radius * blend.normalized();
}

}  // namespace qpchaser
