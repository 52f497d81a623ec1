#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qp_chaser/bernstein.hpp"
#include "test_util.hpp"

using namespace qpchaser;
namespace tu = qpchaser::testutil;

namespace {

Eigen::MatrixXd coeffs(std::initializer_list<double> values) {
  Eigen::MatrixXd m(static_cast<int>(values.size()), 1);
  int i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

BernsteinSegment scalar(std::initializer_list<double> values, double t0 = 0.0, double t1 = 1.0) {
  return BernsteinSegment(t0, t1, coeffs(values));
}

}  // namespace

TEST_CASE("basis_eval matches the closed form") {
  CHECK(basis_eval(1, 2, 0.5, 0.0, 1.0) == doctest::Approx(0.5));
  CHECK(basis_eval(0, 1, 0.25, 0.0, 1.0) == doctest::Approx(0.75));

  double sum = 0.0;
  for (int k = 0; k <= 5; ++k) sum += basis_eval(k, 5, 0.37, 0.0, 2.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(basis_eval(3, 2, 0.5, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(basis_eval(-1, 2, 0.5, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(basis_eval(0, 2, 0.5, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("partition of unity holds for random degree and time") {
  auto gen = tu::rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(tu::uniform(gen, 0.0, 12.0));
    const double t0 = tu::uniform(gen, -3.0, 3.0);
    const double t1 = t0 + tu::uniform(gen, 0.1, 5.0);
    const double t = tu::uniform(gen, t0, t1);
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) sum += basis_eval(k, n, t, t0, t1);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("evaluation by convex combination") {
  CHECK(scalar({0.0, 1.0}).evaluate_scalar(0.5) == doctest::Approx(0.5));
  // Bernstein form of t^2 on [0,1].
  CHECK(scalar({0.0, 0.0, 1.0}).evaluate_scalar(0.3) == doctest::Approx(0.09).epsilon(1e-12));

  auto gen = tu::rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = tu::random_scalar_segment(gen, 5, -1.0, 2.0);
    CHECK(p.evaluate_scalar(-1.0) == doctest::Approx(p.control_points()(0, 0)));
    CHECK(p.evaluate_scalar(2.0) == doctest::Approx(p.control_points()(5, 0)));
  }
  CHECK_THROWS_AS(scalar({0.0, 1.0}).evaluate_scalar(1.5), std::invalid_argument);
}

TEST_CASE("derivative control points") {
  const auto d1 = scalar({0.0, 2.0}).derivative();
  CHECK(d1.degree() == 0);
  CHECK(d1.control_points()(0, 0) == doctest::Approx(2.0));

  const auto d2 = scalar({0.0, 0.0, 1.0}).derivative();  // t^2 -> 2t
  CHECK(d2.degree() == 1);
  CHECK(d2.control_points()(0, 0) == doctest::Approx(0.0));
  CHECK(d2.control_points()(1, 0) == doctest::Approx(2.0));

  const auto dz = scalar({4.0}).derivative();
  CHECK(dz.degree() == 0);
  CHECK(dz.control_points()(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("degree elevation preserves the polynomial") {
  const auto c = scalar({3.0, 3.0}).elevated(2);
  CHECK(c.control_points()(1, 0) == doctest::Approx(3.0));

  const auto lin = scalar({0.0, 1.0}).elevated(2);
  CHECK(lin.control_points()(1, 0) == doctest::Approx(0.5));

  // A min-jerk style cubic elevated to degree 5 evaluates identically.
  const auto cubic = scalar({0.0, 0.0, 1.0, 3.0});
  const auto lifted = cubic.elevated(5);
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    CHECK(std::abs(cubic.evaluate_scalar(t) - lifted.evaluate_scalar(t)) < 1e-12);
  }
  CHECK_THROWS_AS(cubic.elevated(2), std::invalid_argument);
}

TEST_CASE("multiplication by binomial convolution") {
  const auto prod = multiply(scalar({1.0, 0.0}), scalar({0.0, 1.0}));
  CHECK(prod.degree() == 2);
  CHECK(prod.control_points()(0, 0) == doctest::Approx(0.0));
  CHECK(prod.control_points()(1, 0) == doctest::Approx(0.5));
  CHECK(prod.control_points()(2, 0) == doctest::Approx(0.0));

  auto gen = tu::rng(23);
  SUBCASE("multiplying by one equals elevation") {
    const auto p = tu::random_scalar_segment(gen, 4, 0.0, 1.0);
    const auto q = multiply(p, scalar({1.0, 1.0}));
    const auto e = p.elevated(5);
    CHECK((q.control_points() - e.control_points()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("pointwise agreement on random products") {
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = tu::random_scalar_segment(gen, 3, 0.5, 2.5);
      const auto q = tu::random_scalar_segment(gen, 4, 0.5, 2.5);
      const auto pq = multiply(p, q);
      const double t = tu::uniform(gen, 0.5, 2.5);
      CHECK(std::abs(pq.evaluate_scalar(t) - p.evaluate_scalar(t) * q.evaluate_scalar(t)) <
            1e-10);
    }
  }
  CHECK_THROWS_AS(multiply(scalar({1.0, 0.0}), scalar({0.0, 1.0}, 0.0, 2.0)),
                  std::invalid_argument);
}

TEST_CASE("de Casteljau split") {
  const auto halves = scalar({0.0, 2.0}).split(0.5);
  CHECK(halves.first.control_points()(0, 0) == doctest::Approx(0.0));
  CHECK(halves.first.control_points()(1, 0) == doctest::Approx(1.0));
  CHECK(halves.second.control_points()(0, 0) == doctest::Approx(1.0));
  CHECK(halves.second.control_points()(1, 0) == doctest::Approx(2.0));

  auto gen = tu::rng(31);
  SUBCASE("evaluation agreement for random quintics") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = tu::random_scalar_segment(gen, 5, 0.0, 1.5);
      const double tau = tu::uniform(gen, 0.1, 1.4);
      const auto parts = p.split(tau);
      for (int i = 0; i <= 200; ++i) {
        const double t = 1.5 * i / 200.0;
        const double ref = p.evaluate_scalar(t);
        const double got = t <= tau ? parts.first.evaluate_scalar(t)
                                    : parts.second.evaluate_scalar(t);
        CHECK(std::abs(ref - got) < 1e-12);
      }
    }
  }
  SUBCASE("re-split reproduces a three-way tiling") {
    const auto p = tu::random_scalar_segment(gen, 5, 0.0, 3.0);
    const auto ab = p.split(1.0);
    const auto bc = ab.second.split(2.0);
    const auto direct = p.split(2.0);
    for (int i = 0; i <= 50; ++i) {
      const double t = 1.0 + i / 50.0;
      CHECK(std::abs(bc.first.evaluate_scalar(t) - p.evaluate_scalar(t)) < 1e-12);
    }
    CHECK(std::abs(direct.first.evaluate_scalar(1.7) - p.evaluate_scalar(1.7)) < 1e-12);
  }
  CHECK_THROWS_AS(scalar({0.0, 1.0}).split(0.0), std::invalid_argument);
  CHECK_THROWS_AS(scalar({0.0, 1.0}).split(1.0), std::invalid_argument);
}

TEST_CASE("nonnegativity certificate is sufficient but conservative") {
  CHECK(scalar({0.0, 0.5, 0.0}).nonneg_certificate());
  const auto conservative = scalar({1.0, -0.1, 1.0});
  CHECK_FALSE(conservative.nonneg_certificate());
  double min_val = 1e9;
  for (int i = 0; i <= 1000; ++i)
    min_val = std::min(min_val, conservative.evaluate_scalar(i / 1000.0));
  CHECK(min_val > 0.4);  // certificate said no, sampling shows positive

  const auto negative = scalar({-1.0, 0.0, 0.0});
  CHECK_FALSE(negative.nonneg_certificate());
  CHECK(negative.evaluate_scalar(0.0) == doctest::Approx(-1.0));
}

TEST_CASE("certificate soundness under dense sampling") {
  auto gen = tu::rng(41);
  int certified = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = tu::random_scalar_segment(gen, 6, 0.0, 1.0, -1.0, 3.0);
    if (!p.nonneg_certificate()) continue;
    ++certified;
    for (int i = 0; i <= 10000; ++i) {
      if (p.evaluate_scalar(i / 10000.0) < 0.0) {
        FAIL("certified polynomial went negative");
      }
    }
  }
  CHECK(certified > 10);
}

TEST_CASE("Bernstein-Vandermonde interpolation") {
  Eigen::MatrixXd two(2, 1);
  two << 4.0, -1.5;
  const auto lin = interpolate_to_bernstein(two, 0.0, 1.0);
  CHECK(lin.control_points()(0, 0) == doctest::Approx(4.0));
  CHECK(lin.control_points()(1, 0) == doctest::Approx(-1.5));

  Eigen::MatrixXd sq(3, 1);
  sq << 0.0, 0.25, 1.0;  // t^2 sampled at {0, 0.5, 1}
  const auto quad = interpolate_to_bernstein(sq, 0.0, 1.0);
  CHECK(quad.control_points()(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(quad.control_points()(1, 0)) < 1e-12);
  CHECK(quad.control_points()(2, 0) == doctest::Approx(1.0));

  SUBCASE("sin(t) fit at degree 6 is accurate on a dense grid") {
    Eigen::MatrixXd samples(7, 1);
    for (int l = 0; l <= 6; ++l) samples(l, 0) = std::sin(l / 6.0);
    const auto fit = interpolate_to_bernstein(samples, 0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double t = i / 2000.0;
      worst = std::max(worst, std::abs(fit.evaluate_scalar(t) - std::sin(t)));
    }
    CHECK(worst < 1e-6);
  }

  SUBCASE("round trip is the identity on polynomials up to the fit degree") {
    auto gen = tu::rng(53);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + static_cast<int>(tu::uniform(gen, 0.0, 8.0));
      const auto p = tu::random_scalar_segment(gen, n, 0.0, 2.0);
      Eigen::MatrixXd samples(n + 1, 1);
      for (int l = 0; l <= n; ++l) samples(l, 0) = p.evaluate_scalar(2.0 * l / n);
      const auto fit = interpolate_to_bernstein(samples, 0.0, 2.0);
      CHECK((fit.control_points() - p.control_points()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  Eigen::MatrixXd big(14, 1);
  big.setZero();
  CHECK_THROWS_AS(interpolate_to_bernstein(big, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("integral Gram matrices") {
  SUBCASE("degree-1 tracking Gram") {
    const double T = 1.7;
    const Eigen::MatrixXd track = track_gram(1, T);
    CHECK(track(0, 0) == doctest::Approx(T / 3.0));
    CHECK(track(0, 1) == doctest::Approx(T / 6.0));
    CHECK(track(1, 1) == doctest::Approx(T / 3.0));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    CHECK(ones.dot(track * ones) == doctest::Approx(T));
  }

  SUBCASE("constant-1 quadratic form equals the duration for any degree") {
    for (int n = 0; n <= 8; ++n) {
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n + 1);
      CHECK(ones.dot(track_gram(n, 2.3) * ones) == doctest::Approx(2.3));
    }
  }

  SUBCASE("jerk Gram vanishes on elevated quadratics") {
    const auto q = scalar({1.0, -2.0, 0.5}).elevated(3);
    const Eigen::MatrixXd jerk = jerk_gram(3, 1.0);
    const Eigen::VectorXd c = q.control_points().col(0);
    CHECK(std::abs(c.dot(jerk * c)) < 1e-12);
  }

  SUBCASE("jerk Gram matches quadrature on random quintics") {
    auto gen = tu::rng(67);
    for (int trial = 0; trial < 20; ++trial) {
      const double T = tu::uniform(gen, 0.5, 2.0);
      const auto p = tu::random_scalar_segment(gen, 5, 0.0, T);
      const auto jerk_poly = p.derivative().derivative().derivative();
      const double by_quad = tu::quadrature(
          [&](double t) { return std::pow(jerk_poly.evaluate_scalar(t), 2); }, 0.0, T, 4000);
      const Eigen::VectorXd c = p.control_points().col(0);
      const double by_gram = c.dot(jerk_gram(5, T) * c);
      CHECK(std::abs(by_quad - by_gram) < 1e-8 * std::max(1.0, std::abs(by_quad)));
    }
  }

  SUBCASE("tracking Gram matches quadrature") {
    auto gen = tu::rng(71);
    const double T = 1.3;
    const auto p = tu::random_scalar_segment(gen, 6, 0.0, T);
    const Eigen::VectorXd c = p.control_points().col(0);
    const double by_quad =
        tu::quadrature([&](double t) { return std::pow(p.evaluate_scalar(t), 2); }, 0.0, T, 4000);
    CHECK(c.dot(track_gram(6, T) * c) == doctest::Approx(by_quad).epsilon(1e-8));
  }

  CHECK_THROWS_AS(jerk_gram(2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gram_matrices(2, 1.0), std::invalid_argument);
  CHECK(gram_matrices(3, 1.0).track.rows() == 4);
}

TEST_CASE("root finding by subdivision") {
  // t - 0.3 on [0,1].
  const auto lin = scalar({-0.3, 0.7});
  const auto roots = roots_in_interval(lin);
  REQUIRE(roots.size() == 1);
  CHECK(roots[0] == doctest::Approx(0.3).epsilon(1e-9));

  // (t - 0.25)(t - 0.75) built by multiplication.
  const auto prod = multiply(scalar({-0.25, 0.75}), scalar({-0.75, 0.25}));
  const auto two = roots_in_interval(prod);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(two[1] == doctest::Approx(0.75).epsilon(1e-8));

  CHECK(roots_in_interval(scalar({0.5, 1.0, 2.0})).empty());
  CHECK_THROWS_AS(roots_in_interval(scalar({0.0, 0.0, 0.0})), std::invalid_argument);
}

TEST_CASE("root finding agrees with a dense sign-change scan") {
  auto gen = tu::rng(79);
  for (int trial = 0; trial < 60; ++trial) {
    const int degree = trial % 2 == 0 ? 3 : 4;
    const auto p = tu::random_scalar_segment(gen, degree, 0.0, 1.0, -4.0, 4.0);
    if (p.control_points().col(0).cwiseAbs().maxCoeff() < 1e-12) continue;
    const auto roots = roots_in_interval(p);

    const int grid = 10000;
    std::vector<double> scan;
    double prev = p.evaluate_scalar(0.0);
    for (int i = 1; i <= grid; ++i) {
      const double t = static_cast<double>(i) / grid;
      const double cur = p.evaluate_scalar(t);
      if (prev * cur < 0.0) scan.push_back(t - 0.5 / grid);
      prev = cur;
    }
    // No missed sign changes.
    for (double s : scan) {
      bool matched = false;
      for (double r : roots) matched = matched || std::abs(r - s) < 1e-3;
      CHECK_MESSAGE(matched, "missed sign change near t=", s);
    }
    // No spurious roots: every reported root is an actual (near-)zero.
    for (double r : roots) {
      CHECK(std::abs(p.evaluate_scalar(r)) < 1e-6);
    }
  }
}

TEST_CASE("piecewise polynomials tile the domain") {
  auto gen = tu::rng(83);
  const auto p = tu::random_planar_segment(gen, 5, 0.0, 2.0);
  const auto pw = PiecewiseBernstein::single(p).split_at({0.5, 1.2});
  CHECK(pw.num_segments() == 3);
  const auto knots = pw.knots();
  REQUIRE(knots.size() == 4);
  CHECK(knots[1] == doctest::Approx(0.5));
  CHECK(knots[2] == doctest::Approx(1.2));
  for (int i = 0; i <= 100; ++i) {
    const double t = 2.0 * i / 100.0;
    CHECK((pw.evaluate(t) - p.evaluate(t)).norm() < 1e-12);
  }
  CHECK(pw.continuity_gap(0) < 1e-12);
  CHECK(pw.continuity_gap(1) < 1e-10);
  CHECK(pw.continuity_gap(2) < 1e-9);

  const auto piece = pw.restricted(0.5, 1.2);
  CHECK(piece.start_time() == doctest::Approx(0.5));
  CHECK_THROWS_AS(pw.restricted(0.4, 0.6), std::invalid_argument);
}
