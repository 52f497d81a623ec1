#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace qpchaser {

using Vec2 = Eigen::Vector2d;

// Tolerances used across the Bernstein module.
inline constexpr double kEvalAgreementTol = 1e-10;  // pointwise agreement for split/elevate/multiply
inline constexpr double kRootTol = 1e-9;            // root refinement tolerance
inline constexpr int kMaxInterpolationDegree = 12;  // Bernstein-Vandermonde conditioning guard

/// Exact binomial coefficient as double (n <= 40 stays exact in IEEE754).
double binomial(int n, int k);

/// Bernstein basis value B_{k,n}(t) on [t_a, t_b].
double basis_eval(int k, int n, double t, double t_a, double t_b);

/// One polynomial piece in Bernstein form on [t0, t1].
/// Control points are stored row-wise: row k is the k-th control point,
/// columns are axes (1 column for scalar polynomials, 2 for planar curves).
class BernsteinSegment {
 public:
  BernsteinSegment() = default;
  BernsteinSegment(double t0, double t1, Eigen::MatrixXd control_points);

  static BernsteinSegment constant(double t0, double t1, const Eigen::VectorXd& value);
  static BernsteinSegment constant_scalar(double t0, double t1, double value);

  int degree() const { return static_cast<int>(pts_.rows()) - 1; }
  int axes() const { return static_cast<int>(pts_.cols()); }
  double start_time() const { return t0_; }
  double end_time() const { return t1_; }
  double duration() const { return t1_ - t0_; }
  const Eigen::MatrixXd& control_points() const { return pts_; }

  /// Value at t by repeated convex combination (de Casteljau). Throws if t
  /// lies outside [t0, t1] beyond a small tolerance; no extrapolation.
  Eigen::VectorXd evaluate(double t) const;
  double evaluate_scalar(double t) const;

  /// Single axis as a scalar segment.
  BernsteinSegment axis(int a) const;

  BernsteinSegment derivative() const;
  BernsteinSegment elevated(int target_degree) const;
  std::pair<BernsteinSegment, BernsteinSegment> split(double tau) const;
  /// The same polynomial re-expressed on the sub-interval [a, b].
  BernsteinSegment restricted(double a, double b) const;

  /// True iff every control point is >= 0 (scalar only). Sufficient for
  /// nonnegativity on the interval, not necessary.
  bool nonneg_certificate() const;

 private:
  double t0_ = 0.0;
  double t1_ = 1.0;
  Eigen::MatrixXd pts_;
};

/// Product of two scalar segments on the same interval; degree adds,
/// coefficients by binomial convolution.
BernsteinSegment multiply(const BernsteinSegment& p, const BernsteinSegment& q);

/// Degree elevation matrix L with c_m = L * c_n (size (m+1) x (n+1)).
Eigen::MatrixXd elevation_matrix(int from_degree, int to_degree);

/// Difference matrix mapping control points of a degree-n segment to control
/// points of its derivative: size n x (n+1), entries n/duration * (next - cur).
Eigen::MatrixXd derivative_matrix(int degree, double duration);

/// Unique degree-n segment through samples taken at uniform nodes
/// t_l = (1 - l/n) t0 + (l/n) t1. Columns of `samples` are axes.
BernsteinSegment interpolate_to_bernstein(const Eigen::MatrixXd& samples, double t0, double t1);

/// All roots of a scalar segment in the open interval, each reported once,
/// found by sign-certificate subdivision plus bisection refinement.
/// Throws on the identically-zero polynomial.
std::vector<double> roots_in_interval(const BernsteinSegment& p);

/// Integral Gram matrices for one segment: c^T track c = int p(t)^2 dt and
/// c^T jerk c = int p'''(t)^2 dt for a scalar degree-n segment.
struct GramMatrices {
  Eigen::MatrixXd jerk;
  Eigen::MatrixXd track;
  double duration = 0.0;
};

Eigen::MatrixXd track_gram(int degree, double duration);
Eigen::MatrixXd jerk_gram(int degree, double duration);  // requires degree >= 3
GramMatrices gram_matrices(int degree, double duration);

/// Piecewise Bernstein polynomial on contiguous segments sharing knots.
class PiecewiseBernstein {
 public:
  PiecewiseBernstein() = default;
  explicit PiecewiseBernstein(std::vector<BernsteinSegment> segments);

  static PiecewiseBernstein single(BernsteinSegment seg);

  int num_segments() const { return static_cast<int>(segs_.size()); }
  const std::vector<BernsteinSegment>& segments() const { return segs_; }
  const BernsteinSegment& segment(int m) const { return segs_.at(m); }
  double start_time() const { return segs_.front().start_time(); }
  double end_time() const { return segs_.back().end_time(); }
  std::vector<double> knots() const;
  int axes() const { return segs_.front().axes(); }

  Eigen::VectorXd evaluate(double t) const;
  double evaluate_scalar(double t) const;
  PiecewiseBernstein derivative() const;

  /// Re-splits segments so every time in `times` (interior to the domain)
  /// becomes a knot. Existing knots are kept.
  PiecewiseBernstein split_at(const std::vector<double>& times) const;
  /// The piece of the trajectory covering [a, b] as a single segment; [a, b]
  /// must not straddle an interior knot.
  BernsteinSegment restricted(double a, double b) const;

  /// Largest junction mismatch of the order-th derivative across knots.
  double continuity_gap(int order) const;

 private:
  std::vector<BernsteinSegment> segs_;
};

}  // namespace qpchaser
