#pragma once

#include <cstdint>

namespace qpchaser::kernels {

enum class Isa { Scalar, Avx2 };

/// ISA chosen at startup from CPUID (overridable for equivalence tests).
Isa active_isa();
void force_isa(Isa isa);
bool cpu_has_avx2();

/// sums[i] = sum_j sqrt((x[i]-x[j])^2 + (y[i]-y[j])^2), the O(n^2) inner loop
/// of the reachable-set center selection.
void pairwise_distance_sums(const double* x, const double* y, int n, double* sums);

/// Batched clearance certificate for cubic primitives sharing start state
/// against one static disk. Primitive i has per-axis cubic control points
/// [a0, a1, g + s_i/3, s_i - o] relative to the disk center; the kernel
/// writes the minimum degree-6 Bernstein coefficient of
/// ||p_i(t) - o||^2 - r^2 for each primitive.
struct StaticClearanceBatch {
  // Axis-relative constants (control points 0 and 1, and the s-free part of
  // control point 2), already shifted by the disk center.
  double a0x, a1x, gx;
  double a0y, a1y, gy;
  double ox, oy;      // disk center (endpoints arrive in world frame)
  double r2;          // squared combined radius
  const double* sx;   // endpoint x, world frame
  const double* sy;   // endpoint y, world frame
  int n;
};

void min_clearance_coeffs(const StaticClearanceBatch& batch, double* min_coeff);

// Reference implementations, exposed for equivalence tests.
namespace scalar {
void pairwise_distance_sums(const double* x, const double* y, int n, double* sums);
void min_clearance_coeffs(const StaticClearanceBatch& batch, double* min_coeff);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void pairwise_distance_sums(const double* x, const double* y, int n, double* sums);
void min_clearance_coeffs(const StaticClearanceBatch& batch, double* min_coeff);
}  // namespace avx2
#endif

}  // namespace qpchaser::kernels
