// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "mpal/kernels.hpp"

namespace mpal::kernels {
namespace {

void mul_avx2(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double* y, double alpha, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // mul then add (no FMA) to match the scalar rounding
    __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void sub_avx2(double* y, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] -= x[i];
}

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_sumsq_avx2(const double* w, const double* re, const double* im, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  if (im == nullptr) {
    for (; i + 4 <= n; i += 4) {
      __m256d r = _mm256_loadu_pd(re + i);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(r, r), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * (re[i] * re[i]);
    return s;
  }
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_loadu_pd(re + i);
    __m256d m = _mm256_loadu_pd(im + i);
    __m256d mag = _mm256_fmadd_pd(m, m, _mm256_mul_pd(r, r));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), mag, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * (re[i] * re[i] + im[i] * im[i]);
  return s;
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{mul_avx2, axpy_avx2, sub_avx2, dot_avx2, weighted_sumsq_avx2};
  return table;
}

}  // namespace mpal::kernels
