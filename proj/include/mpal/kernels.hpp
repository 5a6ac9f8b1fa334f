#pragma once
// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// The elementwise kernels (mul, axpy, sub) never fuse multiply and add, so
// both variants produce bit-identical results. Reductions (dot, sumsq,
// weighted_sumsq) differ only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace mpal::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  // out[i] = a[i] * b[i]
  void (*mul)(double* out, const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
  // y[i] -= x[i]
  void (*sub)(double* y, const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i w[i] * (re[i]^2 + im[i]^2); im may be null
  double (*weighted_sumsq)(const double* w, const double* re, const double* im, std::size_t n);
};

const KernelTable& scalar_table();
/// Null when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

bool cpu_has_avx2();
/// Kernel set chosen at first use: AVX2 when available, unless the
/// environment variable MPAL_SIMD is set to "scalar".
Isa active_isa();
const KernelTable& active();
/// Force a kernel set (tests and benchmarks). Returns false if unavailable.
bool select(Isa isa);
std::string_view isa_name(Isa isa);

// Convenience wrappers over the active table.
inline void mul(std::span<double> out, std::span<const double> a, std::span<const double> b) {
  active().mul(out.data(), a.data(), b.data(), out.size());
}
inline void axpy(std::span<double> y, double alpha, std::span<const double> x) {
  active().axpy(y.data(), alpha, x.data(), y.size());
}
inline void sub(std::span<double> y, std::span<const double> x) {
  active().sub(y.data(), x.data(), y.size());
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double nrm2sq(std::span<const double> a) { return dot(a, a); }

}  // namespace mpal::kernels
