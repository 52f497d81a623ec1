#pragma once

#include <vector>

#include <Eigen/Dense>

#include "qp_chaser/bernstein.hpp"

namespace qpchaser {

/// Side on which the chasing path passes an obstacle (sign of the relative
/// position determinant at the current time).
enum class OClass { O1, O2 };
/// Side of the target chord the drone keeps in dual-target mode.
enum class FClass { F1, F2 };

OClass topology_class_obstacle(const Vec2& drone, const Vec2& target, const Vec2& obstacle);
FClass topology_class_fov(const Vec2& drone, const Vec2& target1, const Vec2& target2);

/// Inscribed-angle circles through both targets; the dead zone (positions
/// from which the pair exceeds the FOV angle) is their intersection for
/// theta_f >= pi/2, union otherwise.
struct FovGeometry {
  Vec2 center1;
  Vec2 center2;
  double radius = 0.0;
  bool intersection_zone = true;
};

FovGeometry fov_geometry(const Vec2& q1, const Vec2& q2, double theta_f);

/// Scalar Bernstein polynomial whose coefficients are affine functions of a
/// local decision vector z: coefficient k equals weights.row(k) * z + offset(k).
/// Enforcing every coefficient >= 0 certifies the polynomial >= 0 on its
/// interval for any admissible z.
class AffineBernstein {
 public:
  AffineBernstein(double t0, double t1, Eigen::MatrixXd weights, Eigen::VectorXd offset);

  static AffineBernstein from_scalar(const BernsteinSegment& p, int num_vars);
  /// The trajectory axis itself: coefficient k selects decision variable
  /// axis*(degree+1)+k.
  static AffineBernstein decision_axis(double t0, double t1, int degree, int axis, int num_vars);

  int degree() const { return static_cast<int>(weights_.rows()) - 1; }
  int num_vars() const { return static_cast<int>(weights_.cols()); }
  double start_time() const { return t0_; }
  double end_time() const { return t1_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& offset() const { return offset_; }

  AffineBernstein elevated(int target_degree) const;
  AffineBernstein operator+(const AffineBernstein& other) const;
  AffineBernstein operator-(const AffineBernstein& other) const;
  AffineBernstein scaled(double s) const;
  /// Product with a known scalar polynomial on the same interval.
  AffineBernstein times(const BernsteinSegment& p) const;

  /// Concrete polynomial for a given decision vector.
  BernsteinSegment substitute(const Eigen::VectorXd& z) const;
  /// Decision vector pinning a constant position (all control points at x).
  Eigen::VectorXd constant_decision(const Vec2& x) const;

 private:
  double t0_;
  double t1_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd offset_;
};

enum class ConstraintKind { TvrOSeparated, TvrOOverlap, TvrF, Collision };

/// One nonnegativity constraint polynomial on one planning segment.
struct HalfspaceSegment {
  ConstraintKind kind;
  int segment_index = 0;
  AffineBernstein poly;
  bool degenerate = false;  // previous plan already inside the inflated set
};

/// Per-segment geometry of a moving disk, all restricted to one interval.
struct DiskSegment {
  BernsteinSegment center;  // 2 axes
  BernsteinSegment radius;  // scalar
};

/// TVR-O for a segment in the separated regime (reachable sets disjoint
/// throughout). Throws std::runtime_error if a square-root sample turns
/// negative, which indicates a bad segmentation.
AffineBernstein tvr_obstacle_separated(const DiskSegment& target, const DiskSegment& obstacle,
                                       OClass cls, int traj_degree, int interp_degree);

/// TVR-O for a segment in the overlap regime.
AffineBernstein tvr_obstacle_overlap(const DiskSegment& target, const DiskSegment& obstacle,
                                     int traj_degree, int interp_degree);

/// Regime-dispatching wrapper; `separated` comes from the segmentation.
AffineBernstein tvr_obstacle(const DiskSegment& target, const DiskSegment& obstacle, OClass cls,
                             bool separated, int traj_degree, int interp_degree);

/// TVR-F half-space keeping the dead zone out of reach (dual-target mode).
AffineBernstein tvr_fov(const BernsteinSegment& q1, const BernsteinSegment& q2, double theta_f,
                        FClass cls, int traj_degree);

/// Collision half-space tangent to the r_c-inflated obstacle set, oriented by
/// the previous plan. Sets *degenerate when the previous plan dips inside the
/// inflated set (constraint still emitted).
AffineBernstein collision_halfspace(const BernsteinSegment& previous_plan,
                                    const DiskSegment& obstacle, double drone_radius,
                                    int traj_degree, int interp_degree, bool* degenerate);

}  // namespace qpchaser
