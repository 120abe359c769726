#include <immintrin.h>

#include <cstddef>

#include "backends.hpp"

namespace attnfuse::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

Dot3 dot3_avx2(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d wa0 = _mm256_setzero_pd(), wa1 = _mm256_setzero_pd();
  __m256d wb0 = _mm256_setzero_pd(), wb1 = _mm256_setzero_pd();
  __m256d ab0 = _mm256_setzero_pd(), ab1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d w0 = _mm256_loadu_pd(w + i), w1 = _mm256_loadu_pd(w + i + 4);
    const __m256d a0 = _mm256_loadu_pd(a + i), a1 = _mm256_loadu_pd(a + i + 4);
    const __m256d b0 = _mm256_loadu_pd(b + i), b1 = _mm256_loadu_pd(b + i + 4);
    wa0 = _mm256_fmadd_pd(w0, a0, wa0);
    wa1 = _mm256_fmadd_pd(w1, a1, wa1);
    wb0 = _mm256_fmadd_pd(w0, b0, wb0);
    wb1 = _mm256_fmadd_pd(w1, b1, wb1);
    ab0 = _mm256_fmadd_pd(a0, b0, ab0);
    ab1 = _mm256_fmadd_pd(a1, b1, ab1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d w0 = _mm256_loadu_pd(w + i), a0 = _mm256_loadu_pd(a + i), b0 = _mm256_loadu_pd(b + i);
    wa0 = _mm256_fmadd_pd(w0, a0, wa0);
    wb0 = _mm256_fmadd_pd(w0, b0, wb0);
    ab0 = _mm256_fmadd_pd(a0, b0, ab0);
  }
  Dot3 r{hsum(_mm256_add_pd(wa0, wa1)), hsum(_mm256_add_pd(wb0, wb1)), hsum(_mm256_add_pd(ab0, ab1))};
  for (; i < n; ++i) {
    r.wa += w[i] * a[i];
    r.wb += w[i] * b[i];
    r.ab += a[i] * b[i];
  }
  return r;
}

void axpy_diff_avx2(double t, const double* a, const double* b, double* w, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(w + i, _mm256_fmadd_pd(vt, d, _mm256_loadu_pd(w + i)));
  }
  for (; i < n; ++i) w[i] += t * (a[i] - b[i]);
}

void standardize_avx2(double* x, const double* mean, const double* inv_scale, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(mean + i));
    _mm256_storeu_pd(x + i, _mm256_mul_pd(d, _mm256_loadu_pd(inv_scale + i)));
  }
  for (; i < n; ++i) x[i] = (x[i] - mean[i]) * inv_scale[i];
}

void add_squared_diff_avx2(double* acc, const double* x, const double* mean, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(mean + i));
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) {
    const double d = x[i] - mean[i];
    acc[i] += d * d;
  }
}

}  // namespace

const Table kAvx2Table = {dot_avx2, axpy_avx2, dot3_avx2, axpy_diff_avx2, standardize_avx2, add_squared_diff_avx2};

}  // namespace attnfuse::kernels::detail
