#include "qp_chaser/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qpchaser {

namespace {

constexpr double kIntervalTol = 1e-9;

double pascal_table(int n, int k) {
  static const auto table = [] {
    constexpr int kMax = 64;
    std::vector<std::vector<double>> c(kMax + 1);
    for (int i = 0; i <= kMax; ++i) {
      c[i].assign(i + 1, 1.0);
      for (int j = 1; j < i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
    }
    return c;
  }();
  return table[n][k];
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n || n < 0) return 0.0;
  if (n > 64) throw std::invalid_argument("binomial: n exceeds table range");
  return pascal_table(n, k);
}

double basis_eval(int k, int n, double t, double t_a, double t_b) {
  if (k < 0 || k > n) throw std::invalid_argument("basis_eval: index out of range");
  if (!(t_a < t_b)) throw std::invalid_argument("basis_eval: degenerate interval");
  const double h = t_b - t_a;
  return binomial(n, k) * std::pow(t_b - t, n - k) * std::pow(t - t_a, k) / std::pow(h, n);
}

BernsteinSegment::BernsteinSegment(double t0, double t1, Eigen::MatrixXd control_points)
    : t0_(t0), t1_(t1), pts_(std::move(control_points)) {
  if (!(t0_ < t1_)) throw std::invalid_argument("BernsteinSegment: requires t0 < t1");
  if (pts_.rows() < 1 || pts_.cols() < 1)
    throw std::invalid_argument("BernsteinSegment: empty control points");
}

BernsteinSegment BernsteinSegment::constant(double t0, double t1, const Eigen::VectorXd& value) {
  Eigen::MatrixXd pts(1, value.size());
  pts.row(0) = value.transpose();
  return BernsteinSegment(t0, t1, pts);
}

BernsteinSegment BernsteinSegment::constant_scalar(double t0, double t1, double value) {
  Eigen::MatrixXd pts(1, 1);
  pts(0, 0) = value;
  return BernsteinSegment(t0, t1, pts);
}

Eigen::VectorXd BernsteinSegment::evaluate(double t) const {
  const double slack = kIntervalTol * std::max(1.0, duration());
  if (t < t0_ - slack || t > t1_ + slack)
    throw std::invalid_argument("BernsteinSegment::evaluate: t outside interval");
  const double u = std::clamp((t - t0_) / (t1_ - t0_), 0.0, 1.0);
  Eigen::MatrixXd work = pts_;
  for (int level = degree(); level >= 1; --level) {
    for (int k = 0; k < level; ++k) {
      work.row(k) = (1.0 - u) * work.row(k) + u * work.row(k + 1);
    }
  }
  return work.row(0).transpose();
}

double BernsteinSegment::evaluate_scalar(double t) const {
  if (axes() != 1) throw std::invalid_argument("evaluate_scalar: not a scalar segment");
  return evaluate(t)(0);
}

BernsteinSegment BernsteinSegment::axis(int a) const {
  if (a < 0 || a >= axes()) throw std::invalid_argument("axis: out of range");
  return BernsteinSegment(t0_, t1_, pts_.col(a));
}

BernsteinSegment BernsteinSegment::derivative() const {
  if (degree() == 0) {
    return BernsteinSegment(t0_, t1_, Eigen::MatrixXd::Zero(1, axes()));
  }
  const int n = degree();
  Eigen::MatrixXd d(n, axes());
  const double scale = n / duration();
  for (int k = 0; k < n; ++k) d.row(k) = scale * (pts_.row(k + 1) - pts_.row(k));
  return BernsteinSegment(t0_, t1_, d);
}

BernsteinSegment BernsteinSegment::elevated(int target_degree) const {
  if (target_degree < degree())
    throw std::invalid_argument("elevated: target degree below current degree");
  if (target_degree == degree()) return *this;
  return BernsteinSegment(t0_, t1_, elevation_matrix(degree(), target_degree) * pts_);
}

std::pair<BernsteinSegment, BernsteinSegment> BernsteinSegment::split(double tau) const {
  if (!(tau > t0_ && tau < t1_))
    throw std::invalid_argument("split: tau must be strictly inside the interval");
  const double u = (tau - t0_) / (t1_ - t0_);
  const int n = degree();
  Eigen::MatrixXd work = pts_;
  Eigen::MatrixXd left(n + 1, axes());
  Eigen::MatrixXd right(n + 1, axes());
  left.row(0) = work.row(0);
  right.row(n) = work.row(n);
  for (int level = n; level >= 1; --level) {
    for (int k = 0; k < level; ++k) {
      work.row(k) = (1.0 - u) * work.row(k) + u * work.row(k + 1);
    }
    left.row(n - level + 1) = work.row(0);
    right.row(level - 1) = work.row(level - 1);
  }
  return {BernsteinSegment(t0_, tau, left), BernsteinSegment(tau, t1_, right)};
}

BernsteinSegment BernsteinSegment::restricted(double a, double b) const {
  const double slack = kIntervalTol * std::max(1.0, duration());
  if (a < t0_ - slack || b > t1_ + slack || !(a < b))
    throw std::invalid_argument("restricted: [a,b] not inside segment interval");
  BernsteinSegment cur = *this;
  if (a > t0_ + slack) cur = cur.split(a).second;
  if (b < t1_ - slack) cur = cur.split(b).first;
  return cur;
}

bool BernsteinSegment::nonneg_certificate() const {
  if (axes() != 1) throw std::invalid_argument("nonneg_certificate: scalar segments only");
  return (pts_.col(0).array() >= 0.0).all();
}

BernsteinSegment multiply(const BernsteinSegment& p, const BernsteinSegment& q) {
  if (p.axes() != 1 || q.axes() != 1)
    throw std::invalid_argument("multiply: scalar segments only");
  if (std::abs(p.start_time() - q.start_time()) > kIntervalTol ||
      std::abs(p.end_time() - q.end_time()) > kIntervalTol)
    throw std::invalid_argument("multiply: interval mismatch");
  const int np = p.degree();
  const int nq = q.degree();
  const auto& a = p.control_points();
  const auto& b = q.control_points();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(np + nq + 1, 1);
  for (int k = 0; k <= np + nq; ++k) {
    double acc = 0.0;
    const int lo = std::max(0, k - nq);
    const int hi = std::min(k, np);
    for (int l = lo; l <= hi; ++l) {
      acc += binomial(np, l) * binomial(nq, k - l) * a(l, 0) * b(k - l, 0);
    }
    out(k, 0) = acc / binomial(np + nq, k);
  }
  return BernsteinSegment(p.start_time(), p.end_time(), out);
}

Eigen::MatrixXd elevation_matrix(int from_degree, int to_degree) {
  if (to_degree < from_degree) throw std::invalid_argument("elevation_matrix: to < from");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(to_degree + 1, from_degree + 1);
  for (int k = 0; k <= to_degree; ++k) {
    for (int j = std::max(0, k - (to_degree - from_degree)); j <= std::min(k, from_degree); ++j) {
      L(k, j) = binomial(from_degree, j) * binomial(to_degree - from_degree, k - j) /
                binomial(to_degree, k);
    }
  }
  return L;
}

Eigen::MatrixXd derivative_matrix(int degree, double duration) {
  if (degree < 1) throw std::invalid_argument("derivative_matrix: degree >= 1 required");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(degree, degree + 1);
  const double s = degree / duration;
  for (int j = 0; j < degree; ++j) {
    D(j, j) = -s;
    D(j, j + 1) = s;
  }
  return D;
}

BernsteinSegment interpolate_to_bernstein(const Eigen::MatrixXd& samples, double t0, double t1) {
  const int n = static_cast<int>(samples.rows()) - 1;
  if (n < 0) throw std::invalid_argument("interpolate_to_bernstein: no samples");
  if (n > kMaxInterpolationDegree)
    throw std::invalid_argument("interpolate_to_bernstein: degree above conditioning guard");
  if (n == 0) return BernsteinSegment(t0, t1, samples);
  Eigen::MatrixXd B(n + 1, n + 1);
  for (int j = 0; j <= n; ++j) {
    const double u = static_cast<double>(j) / n;
    for (int k = 0; k <= n; ++k) {
      B(j, k) = binomial(n, k) * std::pow(u, k) * std::pow(1.0 - u, n - k);
    }
  }
  Eigen::MatrixXd coeffs = B.partialPivLu().solve(samples);
  return BernsteinSegment(t0, t1, coeffs);
}

namespace {

void collect_root_intervals(const BernsteinSegment& p, double width_tol,
                            std::vector<std::pair<double, double>>* out) {
  const auto& c = p.control_points().col(0);
  if (c.minCoeff() > 0.0 || c.maxCoeff() < 0.0) return;  // sign certificate prunes
  if (p.duration() <= width_tol) {
    out->emplace_back(p.start_time(), p.end_time());
    return;
  }
  const double mid = 0.5 * (p.start_time() + p.end_time());
  auto halves = p.split(mid);
  collect_root_intervals(halves.first, width_tol, out);
  collect_root_intervals(halves.second, width_tol, out);
}

}  // namespace

std::vector<double> roots_in_interval(const BernsteinSegment& p) {
  if (p.axes() != 1) throw std::invalid_argument("roots_in_interval: scalar segments only");
  const double scale = p.control_points().col(0).cwiseAbs().maxCoeff();
  if (scale < 1e-14) throw std::invalid_argument("roots_in_interval: identically zero polynomial");

  std::vector<std::pair<double, double>> candidates;
  collect_root_intervals(p, 1e-10 * std::max(1.0, p.duration()), &candidates);

  std::vector<double> roots;
  const double merge_tol = 1e-7 * std::max(1.0, p.duration());
  for (const auto& [a, b] : candidates) {
    double r = 0.5 * (a + b);
    // Refine by bisection when a bracketing sign change exists nearby.
    double lo = std::max(p.start_time(), r - merge_tol);
    double hi = std::min(p.end_time(), r + merge_tol);
    double flo = p.evaluate_scalar(lo);
    double fhi = p.evaluate_scalar(hi);
    if (flo == 0.0) {
      r = lo;
    } else if (fhi == 0.0) {
      r = hi;
    } else if (flo * fhi < 0.0) {
      for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
        const double m = 0.5 * (lo + hi);
        const double fm = p.evaluate_scalar(m);
        if (fm == 0.0) {
          lo = hi = m;
          break;
        }
        (flo * fm < 0.0 ? hi : lo) = m;
        if (flo * fm >= 0.0) flo = fm;
      }
      r = 0.5 * (lo + hi);
    } else {
      // No sign change: keep only if the polynomial actually grazes zero here.
      if (std::abs(p.evaluate_scalar(r)) > 1e-7 * scale) continue;
    }
    if (r <= p.start_time() + kRootTol || r >= p.end_time() - kRootTol) continue;
    if (!roots.empty() && std::abs(roots.back() - r) < merge_tol) continue;
    roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

Eigen::MatrixXd track_gram(int degree, double duration) {
  if (degree < 0) throw std::invalid_argument("track_gram: negative degree");
  const int n = degree;
  Eigen::MatrixXd B(n + 1, n + 1);
  for (int k = 0; k <= n; ++k)
    for (int l = 0; l <= n; ++l)
      B(k, l) = binomial(n, k) * binomial(n, l) / binomial(2 * n, k + l);
  return duration / (2.0 * n + 1.0) * B;
}

Eigen::MatrixXd jerk_gram(int degree, double duration) {
  if (degree < 3) throw std::invalid_argument("jerk_gram: degree >= 3 required");
  const int n = degree;
  // Third-difference map composed from successive derivative matrices.
  Eigen::MatrixXd D = derivative_matrix(n - 2, duration) * derivative_matrix(n - 1, duration) *
                      derivative_matrix(n, duration);
  const int m = n - 3;
  Eigen::MatrixXd A(m + 1, m + 1);
  for (int k = 0; k <= m; ++k)
    for (int l = 0; l <= m; ++l)
      A(k, l) = binomial(m, k) * binomial(m, l) / binomial(2 * m, k + l);
  return D.transpose() * (duration / (2.0 * n - 5.0) * A) * D;
}

GramMatrices gram_matrices(int degree, double duration) {
  if (degree < 3) throw std::invalid_argument("gram_matrices: degree >= 3 required");
  GramMatrices g;
  g.jerk = jerk_gram(degree, duration);
  g.track = track_gram(degree, duration);
  g.duration = duration;
  return g;
}

PiecewiseBernstein::PiecewiseBernstein(std::vector<BernsteinSegment> segments)
    : segs_(std::move(segments)) {
  if (segs_.empty()) throw std::invalid_argument("PiecewiseBernstein: no segments");
  for (size_t m = 1; m < segs_.size(); ++m) {
    if (std::abs(segs_[m].start_time() - segs_[m - 1].end_time()) > kIntervalTol)
      throw std::invalid_argument("PiecewiseBernstein: segments do not tile the domain");
    if (segs_[m].axes() != segs_[0].axes())
      throw std::invalid_argument("PiecewiseBernstein: mixed axis counts");
  }
}

PiecewiseBernstein PiecewiseBernstein::single(BernsteinSegment seg) {
  std::vector<BernsteinSegment> v;
  v.push_back(std::move(seg));
  return PiecewiseBernstein(std::move(v));
}

std::vector<double> PiecewiseBernstein::knots() const {
  std::vector<double> k;
  k.reserve(segs_.size() + 1);
  k.push_back(segs_.front().start_time());
  for (const auto& s : segs_) k.push_back(s.end_time());
  return k;
}

Eigen::VectorXd PiecewiseBernstein::evaluate(double t) const {
  const double slack = kIntervalTol * std::max(1.0, end_time() - start_time());
  if (t < start_time() - slack || t > end_time() + slack)
    throw std::invalid_argument("PiecewiseBernstein::evaluate: t outside domain");
  for (const auto& s : segs_) {
    if (t <= s.end_time() + kIntervalTol) return s.evaluate(std::clamp(t, s.start_time(), s.end_time()));
  }
  return segs_.back().evaluate(segs_.back().end_time());
}

double PiecewiseBernstein::evaluate_scalar(double t) const {
  if (axes() != 1) throw std::invalid_argument("evaluate_scalar: not scalar");
  return evaluate(t)(0);
}

PiecewiseBernstein PiecewiseBernstein::derivative() const {
  std::vector<BernsteinSegment> out;
  out.reserve(segs_.size());
  for (const auto& s : segs_) out.push_back(s.derivative());
  return PiecewiseBernstein(std::move(out));
}

PiecewiseBernstein PiecewiseBernstein::split_at(const std::vector<double>& times) const {
  std::vector<double> cuts = times;
  std::sort(cuts.begin(), cuts.end());
  std::vector<BernsteinSegment> out;
  for (const auto& s : segs_) {
    BernsteinSegment cur = s;
    for (double c : cuts) {
      if (c > cur.start_time() + kIntervalTol && c < cur.end_time() - kIntervalTol) {
        auto halves = cur.split(c);
        out.push_back(std::move(halves.first));
        cur = std::move(halves.second);
      }
    }
    out.push_back(std::move(cur));
  }
  return PiecewiseBernstein(std::move(out));
}

BernsteinSegment PiecewiseBernstein::restricted(double a, double b) const {
  for (const auto& s : segs_) {
    if (a >= s.start_time() - kIntervalTol && b <= s.end_time() + kIntervalTol) {
      return s.restricted(std::max(a, s.start_time()), std::min(b, s.end_time()));
    }
  }
  throw std::invalid_argument("PiecewiseBernstein::restricted: [a,b] straddles a knot");
}

double PiecewiseBernstein::continuity_gap(int order) const {
  PiecewiseBernstein d = *this;
  for (int i = 0; i < order; ++i) d = d.derivative();
  double worst = 0.0;
  for (size_t m = 1; m < d.segs_.size(); ++m) {
    const double t = d.segs_[m].start_time();
    const Eigen::VectorXd gap =
        d.segs_[m].evaluate(t) - d.segs_[m - 1].evaluate(d.segs_[m - 1].end_time());
    worst = std::max(worst, gap.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace qpchaser
