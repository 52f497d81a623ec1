#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "qp_chaser/kernels.hpp"

namespace qpchaser::kernels::avx2 {

void pairwise_distance_sums(const double* x, const double* y, int n, double* sums) {
  for (int i = 0; i < n; ++i) {
    const __m256d xi = _mm256_set1_pd(x[i]);
    const __m256d yi = _mm256_set1_pd(y[i]);
    __m256d acc = _mm256_setzero_pd();
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + j), xi);
      const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + j), yi);
      const __m256d d2 = _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx));
      acc = _mm256_add_pd(acc, _mm256_sqrt_pd(d2));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; j < n; ++j) {
      const double dx = x[j] - x[i];
      const double dy = y[j] - y[i];
      total += std::sqrt(dx * dx + dy * dy);
    }
    sums[i] = total;
  }
}

void min_clearance_coeffs(const StaticClearanceBatch& b, double* min_coeff) {
  const __m256d a0x = _mm256_set1_pd(b.a0x);
  const __m256d a1x = _mm256_set1_pd(b.a1x);
  const __m256d gx = _mm256_set1_pd(b.gx);
  const __m256d a0y = _mm256_set1_pd(b.a0y);
  const __m256d a1y = _mm256_set1_pd(b.a1y);
  const __m256d gy = _mm256_set1_pd(b.gy);
  const __m256d ox = _mm256_set1_pd(b.ox);
  const __m256d oy = _mm256_set1_pd(b.oy);
  const __m256d r2 = _mm256_set1_pd(b.r2);
  const __m256d third = _mm256_set1_pd(1.0 / 3.0);
  const __m256d c2_lin = _mm256_set1_pd(6.0 / 15.0);
  const __m256d c2_sq = _mm256_set1_pd(9.0 / 15.0);
  const __m256d c3_lin = _mm256_set1_pd(2.0 / 20.0);
  const __m256d c3_mid = _mm256_set1_pd(18.0 / 20.0);
  const __m256d c4_lin = _mm256_set1_pd(6.0 / 15.0);
  const __m256d c4_sq = _mm256_set1_pd(9.0 / 15.0);

  int i = 0;
  for (; i + 4 <= b.n; i += 4) {
    const __m256d sx = _mm256_loadu_pd(b.sx + i);
    const __m256d sy = _mm256_loadu_pd(b.sy + i);
    const __m256d a2x = _mm256_fmadd_pd(sx, third, gx);
    const __m256d a3x = _mm256_sub_pd(sx, ox);
    const __m256d a2y = _mm256_fmadd_pd(sy, third, gy);
    const __m256d a3y = _mm256_sub_pd(sy, oy);

    const __m256d a1sq = _mm256_fmadd_pd(a1y, a1y, _mm256_mul_pd(a1x, a1x));
    const __m256d a2sq = _mm256_fmadd_pd(a2y, a2y, _mm256_mul_pd(a2x, a2x));
    const __m256d d02 = _mm256_fmadd_pd(a0y, a2y, _mm256_mul_pd(a0x, a2x));
    const __m256d d03 = _mm256_fmadd_pd(a0y, a3y, _mm256_mul_pd(a0x, a3x));
    const __m256d d12 = _mm256_fmadd_pd(a1y, a2y, _mm256_mul_pd(a1x, a2x));
    const __m256d d13 = _mm256_fmadd_pd(a1y, a3y, _mm256_mul_pd(a1x, a3x));
    const __m256d d23 = _mm256_fmadd_pd(a2y, a3y, _mm256_mul_pd(a2x, a3x));

    const __m256d c0 = _mm256_set1_pd(b.a0x * b.a0x + b.a0y * b.a0y);
    const __m256d c1 = _mm256_set1_pd(b.a0x * b.a1x + b.a0y * b.a1y);
    const __m256d c2 = _mm256_fmadd_pd(c2_sq, a1sq, _mm256_mul_pd(c2_lin, d02));
    const __m256d c3 = _mm256_fmadd_pd(c3_mid, d12, _mm256_mul_pd(c3_lin, d03));
    const __m256d c4 = _mm256_fmadd_pd(c4_sq, a2sq, _mm256_mul_pd(c4_lin, d13));
    const __m256d c5 = d23;
    const __m256d c6 = _mm256_fmadd_pd(a3y, a3y, _mm256_mul_pd(a3x, a3x));

    __m256d m = _mm256_min_pd(c0, c1);
    m = _mm256_min_pd(m, c2);
    m = _mm256_min_pd(m, c3);
    m = _mm256_min_pd(m, c4);
    m = _mm256_min_pd(m, c5);
    m = _mm256_min_pd(m, c6);
    _mm256_storeu_pd(min_coeff + i, _mm256_sub_pd(m, r2));
  }
  if (i < b.n) {
    StaticClearanceBatch tail = b;
    tail.sx = b.sx + i;
    tail.sy = b.sy + i;
    tail.n = b.n - i;
    scalar::min_clearance_coeffs(tail, min_coeff + i);
  }
}

}  // namespace qpchaser::kernels::avx2

#endif  // x86_64
