#include "qp_chaser/visibility.hpp"

#include <cmath>
#include <stdexcept>

namespace qpchaser {

namespace {

constexpr double kIntervalTol = 1e-9;

double det2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

void check_same_interval(double a0, double a1, double b0, double b1, const char* what) {
  if (std::abs(a0 - b0) > kIntervalTol || std::abs(a1 - b1) > kIntervalTol)
    throw std::invalid_argument(std::string(what) + ": interval mismatch");
}

}  // namespace

OClass topology_class_obstacle(const Vec2& drone, const Vec2& target, const Vec2& obstacle) {
  const Vec2 co = drone - obstacle;
  const Vec2 qo = target - obstacle;
  if (co.norm() < 1e-12 || qo.norm() < 1e-12)
    throw std::invalid_argument("topology_class_obstacle: coincident points");
  return det2(co, qo) >= 0.0 ? OClass::O1 : OClass::O2;
}

FClass topology_class_fov(const Vec2& drone, const Vec2& target1, const Vec2& target2) {
  const Vec2 cq = drone - target1;
  const Vec2 qq = target2 - target1;
  if (qq.norm() < 1e-12) throw std::invalid_argument("topology_class_fov: coincident targets");
  return det2(cq, qq) >= 0.0 ? FClass::F1 : FClass::F2;
}

FovGeometry fov_geometry(const Vec2& q1, const Vec2& q2, double theta_f) {
  if (!(theta_f > 0.0 && theta_f < M_PI))
    throw std::invalid_argument("fov_geometry: theta_f must lie in (0, pi)");
  const Vec2 d = q2 - q1;
  const double dist = d.norm();
  if (dist < 1e-12) throw std::invalid_argument("fov_geometry: coincident targets");
  const double cot = std::cos(theta_f) / std::sin(theta_f);
  FovGeometry g;
  g.center1 = 0.5 * Vec2(d.x() + cot * d.y(), -cot * d.x() + d.y()) + q1;
  g.center2 = 0.5 * Vec2(d.x() - cot * d.y(), cot * d.x() + d.y()) + q1;
  g.radius = dist / (2.0 * std::sin(theta_f));
  g.intersection_zone = theta_f >= M_PI / 2.0;
  return g;
}

AffineBernstein::AffineBernstein(double t0, double t1, Eigen::MatrixXd weights,
                                 Eigen::VectorXd offset)
    : t0_(t0), t1_(t1), weights_(std::move(weights)), offset_(std::move(offset)) {
  if (weights_.rows() != offset_.size())
    throw std::invalid_argument("AffineBernstein: weight/offset size mismatch");
  if (!(t0_ < t1_)) throw std::invalid_argument("AffineBernstein: requires t0 < t1");
}

AffineBernstein AffineBernstein::from_scalar(const BernsteinSegment& p, int num_vars) {
  return AffineBernstein(p.start_time(), p.end_time(),
                         Eigen::MatrixXd::Zero(p.degree() + 1, num_vars),
                         p.control_points().col(0));
}

AffineBernstein AffineBernstein::decision_axis(double t0, double t1, int degree, int axis,
                                               int num_vars) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(degree + 1, num_vars);
  for (int k = 0; k <= degree; ++k) w(k, axis * (degree + 1) + k) = 1.0;
  return AffineBernstein(t0, t1, std::move(w), Eigen::VectorXd::Zero(degree + 1));
}

AffineBernstein AffineBernstein::elevated(int target_degree) const {
  if (target_degree == degree()) return *this;
  const Eigen::MatrixXd L = elevation_matrix(degree(), target_degree);
  return AffineBernstein(t0_, t1_, L * weights_, L * offset_);
}

AffineBernstein AffineBernstein::operator+(const AffineBernstein& other) const {
  check_same_interval(t0_, t1_, other.t0_, other.t1_, "AffineBernstein::operator+");
  const int deg = std::max(degree(), other.degree());
  const AffineBernstein a = elevated(deg);
  const AffineBernstein b = other.elevated(deg);
  return AffineBernstein(t0_, t1_, a.weights_ + b.weights_, a.offset_ + b.offset_);
}

AffineBernstein AffineBernstein::operator-(const AffineBernstein& other) const {
  return *this + other.scaled(-1.0);
}

AffineBernstein AffineBernstein::scaled(double s) const {
  return AffineBernstein(t0_, t1_, s * weights_, s * offset_);
}

AffineBernstein AffineBernstein::times(const BernsteinSegment& p) const {
  check_same_interval(t0_, t1_, p.start_time(), p.end_time(), "AffineBernstein::times");
  if (p.axes() != 1) throw std::invalid_argument("AffineBernstein::times: scalar factor only");
  const int na = degree();
  const int nb = p.degree();
  const auto& q = p.control_points();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(na + nb + 1, num_vars());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(na + nb + 1);
  for (int k = 0; k <= na + nb; ++k) {
    const int lo = std::max(0, k - nb);
    const int hi = std::min(k, na);
    const double denom = binomial(na + nb, k);
    for (int l = lo; l <= hi; ++l) {
      const double c = binomial(na, l) * binomial(nb, k - l) / denom * q(k - l, 0);
      w.row(k) += c * weights_.row(l);
      b(k) += c * offset_(l);
    }
  }
  return AffineBernstein(t0_, t1_, std::move(w), std::move(b));
}

BernsteinSegment AffineBernstein::substitute(const Eigen::VectorXd& z) const {
  return BernsteinSegment(t0_, t1_, weights_ * z + offset_);
}

Eigen::VectorXd AffineBernstein::constant_decision(const Vec2& x) const {
  const int per_axis = num_vars() / 2;
  Eigen::VectorXd z(num_vars());
  z.head(per_axis).setConstant(x.x());
  z.tail(per_axis).setConstant(x.y());
  return z;
}

namespace {

struct RelativeGeometry {
  BernsteinSegment diff_x;  // first - second, x component
  BernsteinSegment diff_y;
  BernsteinSegment dist2;   // squared norm of the difference
};

RelativeGeometry relative_geometry(const BernsteinSegment& a, const BernsteinSegment& b) {
  const int deg = std::max(a.degree(), b.degree());
  const BernsteinSegment ae = a.elevated(deg);
  const BernsteinSegment be = b.elevated(deg);
  const double t0 = a.start_time();
  const double t1 = a.end_time();
  BernsteinSegment dx(t0, t1, ae.control_points().col(0) - be.control_points().col(0));
  BernsteinSegment dy(t0, t1, ae.control_points().col(1) - be.control_points().col(1));
  BernsteinSegment d2xx = multiply(dx, dx);
  BernsteinSegment d2yy = multiply(dy, dy);
  BernsteinSegment d2(t0, t1, d2xx.control_points().col(0) + d2yy.control_points().col(0));
  return {std::move(dx), std::move(dy), std::move(d2)};
}

BernsteinSegment add_scalar(const BernsteinSegment& a, const BernsteinSegment& b, double sb = 1.0) {
  const int deg = std::max(a.degree(), b.degree());
  return BernsteinSegment(a.start_time(), a.end_time(),
                          a.elevated(deg).control_points().col(0) +
                              sb * b.elevated(deg).control_points().col(0));
}

/// Samples f at the uniform interpolation nodes and fits a Bernstein segment.
template <typename F>
BernsteinSegment interpolated(double t0, double t1, int degree, F&& f) {
  Eigen::MatrixXd samples(degree + 1, 1);
  for (int l = 0; l <= degree; ++l) {
    const double t = (1.0 - static_cast<double>(l) / degree) * t0 +
                     static_cast<double>(l) / degree * t1;
    samples(l, 0) = f(t);
  }
  return interpolate_to_bernstein(samples, t0, t1);
}

}  // namespace

AffineBernstein tvr_obstacle_separated(const DiskSegment& target, const DiskSegment& obstacle,
                                       OClass cls, int traj_degree, int interp_degree) {
  const double t0 = target.center.start_time();
  const double t1 = target.center.end_time();
  check_same_interval(t0, t1, obstacle.center.start_time(), obstacle.center.end_time(),
                      "tvr_obstacle_separated");
  const int nvars = 2 * (traj_degree + 1);

  const RelativeGeometry qo = relative_geometry(target.center, obstacle.center);
  const BernsteinSegment r_qo = add_scalar(target.radius, obstacle.radius);

  // Negative samples near the segment ends come from root-merging slop in
  // the segmentation and clamp to zero (the constraint degenerates toward the
  // touching-sets tangent, which stays a valid separator). A negative sample
  // in the middle of the segment means the caller handed an overlap-regime
  // interval to the separated branch.
  const double scale = std::max(1.0, qo.dist2.control_points().col(0).cwiseAbs().maxCoeff());
  const int mid_node = interp_degree / 2;
  int node = 0;
  const BernsteinSegment d2_tilde = interpolated(t0, t1, interp_degree, [&](double t) {
    const double v = qo.dist2.evaluate_scalar(t) - std::pow(r_qo.evaluate_scalar(t), 2);
    if (node++ == mid_node && v < -1e-6 * scale)
      throw std::runtime_error("tvr_obstacle_separated: segment violates the separated regime");
    return std::sqrt(std::max(0.0, v));
  });

  const AffineBernstein cx = AffineBernstein::decision_axis(t0, t1, traj_degree, 0, nvars);
  const AffineBernstein cy = AffineBernstein::decision_axis(t0, t1, traj_degree, 1, nvars);
  const AffineBernstein xo_x = cx - AffineBernstein::from_scalar(obstacle.center.axis(0), nvars);
  const AffineBernstein xo_y = cy - AffineBernstein::from_scalar(obstacle.center.axis(1), nvars);

  // r_qo * <q-o, x-o>  +/-  d2 * det[[x-o],[q-o]]  -  r_o * d1^2
  const AffineBernstein dot_term =
      (xo_x.times(qo.diff_x) + xo_y.times(qo.diff_y)).times(r_qo);
  const AffineBernstein det_term =
      (xo_x.times(qo.diff_y) - xo_y.times(qo.diff_x)).times(d2_tilde);
  const BernsteinSegment excl = multiply(obstacle.radius, qo.dist2);
  const double sign = (cls == OClass::O1) ? 1.0 : -1.0;

  return dot_term + det_term.scaled(sign) - AffineBernstein::from_scalar(excl, nvars);
}

AffineBernstein tvr_obstacle_overlap(const DiskSegment& target, const DiskSegment& obstacle,
                                     int traj_degree, int interp_degree) {
  const double t0 = target.center.start_time();
  const double t1 = target.center.end_time();
  check_same_interval(t0, t1, obstacle.center.start_time(), obstacle.center.end_time(),
                      "tvr_obstacle_overlap");
  const int nvars = 2 * (traj_degree + 1);

  const RelativeGeometry qo = relative_geometry(target.center, obstacle.center);
  const BernsteinSegment d1_tilde = interpolated(t0, t1, interp_degree, [&](double t) {
    return std::sqrt(std::max(0.0, qo.dist2.evaluate_scalar(t)));
  });

  const AffineBernstein cx = AffineBernstein::decision_axis(t0, t1, traj_degree, 0, nvars);
  const AffineBernstein cy = AffineBernstein::decision_axis(t0, t1, traj_degree, 1, nvars);
  const AffineBernstein xq_x = cx - AffineBernstein::from_scalar(target.center.axis(0), nvars);
  const AffineBernstein xq_y = cy - AffineBernstein::from_scalar(target.center.axis(1), nvars);

  const AffineBernstein dot_term = xq_x.times(qo.diff_x) + xq_y.times(qo.diff_y);
  const BernsteinSegment excl = multiply(target.radius, d1_tilde);
  return dot_term - AffineBernstein::from_scalar(excl, nvars);
}

AffineBernstein tvr_obstacle(const DiskSegment& target, const DiskSegment& obstacle, OClass cls,
                             bool separated, int traj_degree, int interp_degree) {
  return separated ? tvr_obstacle_separated(target, obstacle, cls, traj_degree, interp_degree)
                   : tvr_obstacle_overlap(target, obstacle, traj_degree, interp_degree);
}

AffineBernstein tvr_fov(const BernsteinSegment& q1, const BernsteinSegment& q2, double theta_f,
                        FClass cls, int traj_degree) {
  const double t0 = q1.start_time();
  const double t1 = q1.end_time();
  check_same_interval(t0, t1, q2.start_time(), q2.end_time(), "tvr_fov");
  const int nvars = 2 * (traj_degree + 1);

  const RelativeGeometry q12 = relative_geometry(q2, q1);  // q2 - q1
  const AffineBernstein cx = AffineBernstein::decision_axis(t0, t1, traj_degree, 0, nvars);
  const AffineBernstein cy = AffineBernstein::decision_axis(t0, t1, traj_degree, 1, nvars);
  const AffineBernstein xq_x = cx - AffineBernstein::from_scalar(q1.axis(0), nvars);
  const AffineBernstein xq_y = cy - AffineBernstein::from_scalar(q1.axis(1), nvars);

  const AffineBernstein det = xq_x.times(q12.diff_y) - xq_y.times(q12.diff_x);
  const double k_f = (1.0 + std::cos(theta_f)) / (2.0 * std::sin(theta_f));
  const double sign = (cls == FClass::F1) ? 1.0 : -1.0;
  return det.scaled(sign) -
         AffineBernstein::from_scalar(BernsteinSegment(t0, t1, k_f * q12.dist2.control_points()),
                                      nvars);
}

AffineBernstein collision_halfspace(const BernsteinSegment& previous_plan,
                                    const DiskSegment& obstacle, double drone_radius,
                                    int traj_degree, int interp_degree, bool* degenerate) {
  const double t0 = previous_plan.start_time();
  const double t1 = previous_plan.end_time();
  check_same_interval(t0, t1, obstacle.center.start_time(), obstacle.center.end_time(),
                      "collision_halfspace");
  const int nvars = 2 * (traj_degree + 1);

  const RelativeGeometry po = relative_geometry(previous_plan, obstacle.center);
  bool degenerate_local = false;
  const BernsteinSegment d3_tilde = interpolated(t0, t1, interp_degree, [&](double t) {
    const double dist = std::sqrt(std::max(0.0, po.dist2.evaluate_scalar(t)));
    if (dist < obstacle.radius.evaluate_scalar(t) + drone_radius) degenerate_local = true;
    return dist;
  });
  if (degenerate != nullptr) *degenerate = degenerate_local;

  const AffineBernstein cx = AffineBernstein::decision_axis(t0, t1, traj_degree, 0, nvars);
  const AffineBernstein cy = AffineBernstein::decision_axis(t0, t1, traj_degree, 1, nvars);
  const AffineBernstein xo_x = cx - AffineBernstein::from_scalar(obstacle.center.axis(0), nvars);
  const AffineBernstein xo_y = cy - AffineBernstein::from_scalar(obstacle.center.axis(1), nvars);

  const AffineBernstein dot_term = xo_x.times(po.diff_x) + xo_y.times(po.diff_y);
  BernsteinSegment inflated(t0, t1,
                            obstacle.radius.control_points().col(0).array() + drone_radius);
  const BernsteinSegment excl = multiply(inflated, d3_tilde);
  return dot_term - AffineBernstein::from_scalar(excl, nvars);
}

}  // namespace qpchaser
