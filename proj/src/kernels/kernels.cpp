#include "attnfuse/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "backends.hpp"

namespace attnfuse::kernels {
namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(ATTNFUSE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(ATTNFUSE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect() {
  if (const char* env = std::getenv("ATTNFUSE_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && cpu_supports(Backend::Avx2)) return Backend::Avx2;
    if (v == "neon" && cpu_supports(Backend::Neon)) return Backend::Neon;
  }
  if (cpu_supports(Backend::Avx2)) return Backend::Avx2;
  if (cpu_supports(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{&table(detect())};
  return t;
}

std::atomic<Backend>& current_backend() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

std::string_view name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "?";
}

bool available(Backend b) { return cpu_supports(b); }

Backend active() { return current_backend().load(); }

void set_backend(Backend b) {
  if (!cpu_supports(b)) throw std::invalid_argument("kernel backend '" + std::string(name(b)) + "' not available");
  current().store(&table(b));
  current_backend().store(b);
}

const Table& table(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return detail::kScalarTable;
    case Backend::Avx2:
#if defined(ATTNFUSE_HAVE_AVX2)
      return detail::kAvx2Table;
#else
      break;
#endif
    case Backend::Neon:
#if defined(ATTNFUSE_HAVE_NEON)
      return detail::kNeonTable;
#else
      break;
#endif
  }
  throw std::invalid_argument("kernel backend '" + std::string(name(b)) + "' not compiled in");
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return current().load(std::memory_order_relaxed)->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  current().load(std::memory_order_relaxed)->axpy(alpha, x.data(), y.data(), x.size());
}

Dot3 dot3(std::span<const double> w, std::span<const double> a, std::span<const double> b) {
  assert(w.size() == a.size() && a.size() == b.size());
  return current().load(std::memory_order_relaxed)->dot3(w.data(), a.data(), b.data(), w.size());
}

void axpy_diff(double t, std::span<const double> a, std::span<const double> b, std::span<double> w) {
  assert(w.size() == a.size() && a.size() == b.size());
  current().load(std::memory_order_relaxed)->axpy_diff(t, a.data(), b.data(), w.data(), w.size());
}

void standardize(std::span<double> x, std::span<const double> mean, std::span<const double> inv_scale) {
  assert(x.size() == mean.size() && x.size() == inv_scale.size());
  current().load(std::memory_order_relaxed)->standardize(x.data(), mean.data(), inv_scale.data(), x.size());
}

void add_squared_diff(std::span<double> acc, std::span<const double> x, std::span<const double> mean) {
  assert(acc.size() == x.size() && x.size() == mean.size());
  current().load(std::memory_order_relaxed)->add_squared_diff(acc.data(), x.data(), mean.data(), x.size());
}

}  // namespace attnfuse::kernels
