#include <cmath>

#include "qp_chaser/kernels.hpp"

namespace qpchaser::kernels::scalar {

void pairwise_distance_sums(const double* x, const double* y, int n, double* sums) {
  for (int i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double dx = x[j] - xi;
      const double dy = y[j] - yi;
      acc += std::sqrt(dx * dx + dy * dy);
    }
    sums[i] = acc;
  }
}

void min_clearance_coeffs(const StaticClearanceBatch& b, double* min_coeff) {
  for (int i = 0; i < b.n; ++i) {
    const double a2x = b.gx + b.sx[i] / 3.0;
    const double a3x = b.sx[i] - b.ox;
    const double a2y = b.gy + b.sy[i] / 3.0;
    const double a3y = b.sy[i] - b.oy;

    // Degree-6 coefficients of dx^2 + dy^2 (binomial convolution of a cubic
    // with itself), minus the constant squared radius.
    const double c0 = b.a0x * b.a0x + b.a0y * b.a0y;
    const double c1 = b.a0x * b.a1x + b.a0y * b.a1y;
    const double c2 = (6.0 * (b.a0x * a2x + b.a0y * a2y) +
                       9.0 * (b.a1x * b.a1x + b.a1y * b.a1y)) / 15.0;
    const double c3 = (2.0 * (b.a0x * a3x + b.a0y * a3y) +
                       18.0 * (b.a1x * a2x + b.a1y * a2y)) / 20.0;
    const double c4 = (6.0 * (b.a1x * a3x + b.a1y * a3y) +
                       9.0 * (a2x * a2x + a2y * a2y)) / 15.0;
    const double c5 = a2x * a3x + a2y * a3y;
    const double c6 = a3x * a3x + a3y * a3y;

    double m = c0;
    if (c1 < m) m = c1;
    if (c2 < m) m = c2;
    if (c3 < m) m = c3;
    if (c4 < m) m = c4;
    if (c5 < m) m = c5;
    if (c6 < m) m = c6;
    min_coeff[i] = m - b.r2;
  }
}

}  // namespace qpchaser::kernels::scalar
