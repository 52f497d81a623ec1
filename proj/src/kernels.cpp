#include "qp_chaser/kernels.hpp"

namespace qpchaser::kernels {

namespace {

Isa detect_isa() {
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2()) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa& isa_slot() {
  static Isa isa = detect_isa();
  return isa;
}

}  // namespace

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Isa active_isa() { return isa_slot(); }

void force_isa(Isa isa) {
#if !(defined(__x86_64__) || defined(_M_X64))
  isa = Isa::Scalar;
#endif
  if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
  isa_slot() = isa;
}

void pairwise_distance_sums(const double* x, const double* y, int n, double* sums) {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_isa() == Isa::Avx2) {
    avx2::pairwise_distance_sums(x, y, n, sums);
    return;
  }
#endif
  scalar::pairwise_distance_sums(x, y, n, sums);
}

void min_clearance_coeffs(const StaticClearanceBatch& batch, double* min_coeff) {
#if defined(__x86_64__) || defined(_M_X64)
  if (active_isa() == Isa::Avx2) {
    avx2::min_clearance_coeffs(batch, min_coeff);
    return;
  }
#endif
  scalar::min_clearance_coeffs(batch, min_coeff);
}

}  // namespace qpchaser::kernels
