#include <cstddef>

#include "backends.hpp"

namespace attnfuse::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

Dot3 dot3_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  Dot3 r;
  for (std::size_t i = 0; i < n; ++i) {
    r.wa += w[i] * a[i];
    r.wb += w[i] * b[i];
    r.ab += a[i] * b[i];
  }
  return r;
}

void axpy_diff_scalar(double t, const double* a, const double* b, double* w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) w[i] += t * (a[i] - b[i]);
}

void standardize_scalar(double* x, const double* mean, const double* inv_scale, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = (x[i] - mean[i]) * inv_scale[i];
}

void add_squared_diff_scalar(double* acc, const double* x, const double* mean, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean[i];
    acc[i] += d * d;
  }
}

}  // namespace

const Table kScalarTable = {dot_scalar, axpy_scalar, dot3_scalar, axpy_diff_scalar, standardize_scalar, add_squared_diff_scalar};

}  // namespace attnfuse::kernels::detail
