#include "mpal/kernels.hpp"

namespace mpal::kernels {
namespace {

void mul_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_scalar(double* y, double alpha, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sub_scalar(double* y, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] -= x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_sumsq_scalar(const double* w, const double* re, const double* im, std::size_t n) {
  double s = 0.0;
  if (im == nullptr) {
    for (std::size_t i = 0; i < n; ++i) s += w[i] * (re[i] * re[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) s += w[i] * (re[i] * re[i] + im[i] * im[i]);
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{mul_scalar, axpy_scalar, sub_scalar, dot_scalar,
                                 weighted_sumsq_scalar};
  return table;
}

}  // namespace mpal::kernels
