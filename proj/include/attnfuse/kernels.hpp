#pragma once

#include <span>
#include <string_view>

// Arithmetic inner loops shared by the trainers. Each kernel has a scalar
// reference implementation and, where the target supports it, an AVX2 or
// NEON variant. The variant is picked once at startup from the CPU features
// and can be overridden with ATTNFUSE_SIMD=scalar|avx2|neon or set_backend().
namespace attnfuse::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view name(Backend b);
bool available(Backend b);
Backend active();
// Throws std::invalid_argument when the backend is not available on this CPU.
void set_backend(Backend b);

double dot(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct Dot3 {
  double wa = 0.0;
  double wb = 0.0;
  double ab = 0.0;
};

// w.a, w.b and a.b in one sweep.
Dot3 dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b);

// w += t * (a - b)
void axpy_diff(double t, std::span<const double> a, std::span<const double> b, std::span<double> w);

// x[i] = (x[i] - mean[i]) * inv_scale[i]
void standardize(std::span<double> x, std::span<const double> mean, std::span<const double> inv_scale);

// acc[i] += (x[i] - mean[i])^2
void add_squared_diff(std::span<double> acc, std::span<const double> x, std::span<const double> mean);

// Direct access to one backend, bypassing dispatch. Used by equivalence tests.
struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  Dot3 (*dot3)(const double*, const double*, const double*, std::size_t);
  void (*axpy_diff)(double, const double*, const double*, double*, std::size_t);
  void (*standardize)(double*, const double*, const double*, std::size_t);
  void (*add_squared_diff)(double*, const double*, const double*, std::size_t);
};

const Table& table(Backend b);

}  // namespace attnfuse::kernels
