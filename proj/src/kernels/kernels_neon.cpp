#include <arm_neon.h>

#include <cstddef>

#include "backends.hpp"

namespace attnfuse::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

Dot3 dot3_neon(const double* w, const double* a, const double* b, std::size_t n) {
  float64x2_t wa = vdupq_n_f64(0.0), wb = vdupq_n_f64(0.0), ab = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t w0 = vld1q_f64(w + i), a0 = vld1q_f64(a + i), b0 = vld1q_f64(b + i);
    wa = vfmaq_f64(wa, w0, a0);
    wb = vfmaq_f64(wb, w0, b0);
    ab = vfmaq_f64(ab, a0, b0);
  }
  Dot3 r{vaddvq_f64(wa), vaddvq_f64(wb), vaddvq_f64(ab)};
  for (; i < n; ++i) {
    r.wa += w[i] * a[i];
    r.wb += w[i] * b[i];
    r.ab += a[i] * b[i];
  }
  return r;
}

void axpy_diff_neon(double t, const double* a, const double* b, double* w, std::size_t n) {
  const float64x2_t vt = vdupq_n_f64(t);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(w + i, vfmaq_f64(vld1q_f64(w + i), vt, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
  for (; i < n; ++i) w[i] += t * (a[i] - b[i]);
}

void standardize_neon(double* x, const double* mean, const double* inv_scale, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vmulq_f64(vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i)), vld1q_f64(inv_scale + i)));
  }
  for (; i < n; ++i) x[i] = (x[i] - mean[i]) * inv_scale[i];
}

void add_squared_diff_neon(double* acc, const double* x, const double* mean, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i));
    vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), d, d));
  }
  for (; i < n; ++i) {
    const double d = x[i] - mean[i];
    acc[i] += d * d;
  }
}

}  // namespace

const Table kNeonTable = {dot_neon, axpy_neon, dot3_neon, axpy_diff_neon, standardize_neon, add_squared_diff_neon};

}  // namespace attnfuse::kernels::detail
