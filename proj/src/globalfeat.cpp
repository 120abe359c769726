#include "attnfuse/globalfeat.hpp"

#include <algorithm>
#include <cmath>

#include "attnfuse/error.hpp"

namespace attnfuse {
namespace {

void require_length(std::size_t n) {
  if (n < 4) throw Error(ErrorKind::TooShort, "global features need at least 4 samples, got " + std::to_string(n));
}

inline double ratio(double num, double den) { return den != 0.0 ? num / den : 0.0; }

struct Maxima {
  std::size_t count = 0;
  // indices of the three largest maxima, by value desc then index asc
  std::array<std::size_t, 3> top{};
  std::size_t top_n = 0;
};

Maxima local_maxima(std::span<const double> x) {
  Maxima m;
  const std::size_t n = x.size();
  auto better = [&](std::size_t a, std::size_t b) { return x[a] > x[b] || (x[a] == x[b] && a < b); };
  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(x[i] > x[i - 1])) {
      ++i;
      continue;
    }
    std::size_t k = i;
    while (k + 1 < n && x[k + 1] == x[i]) ++k;
    if (k + 1 < n && x[k + 1] < x[i]) {
      ++m.count;
      // insertion into the running top-3
      std::size_t pos = m.top_n;
      while (pos > 0 && better(i, m.top[pos - 1])) --pos;
      if (pos < 3) {
        for (std::size_t q = std::min<std::size_t>(m.top_n, 2); q > pos; --q) m.top[q] = m.top[q - 1];
        m.top[pos] = i;
        m.top_n = std::min<std::size_t>(m.top_n + 1, 3);
      }
    }
    i = k + 1;
  }
  return m;
}

}  // namespace

KinematicDerivatives kinematics(std::span<const double> x) {
  require_length(x.size());
  KinematicDerivatives d;
  d.x.assign(x.begin(), x.end());
  const std::size_t n = x.size();
  d.v.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) d.v[i] = x[i + 1] - x[i];
  d.a.resize(n - 2);
  d.a_t.resize(n - 2);
  d.a_c.resize(n - 2);
  for (std::size_t i = 0; i + 2 < n; ++i) {
    d.a[i] = d.v[i + 1] - d.v[i];
    d.a_t[i] = std::abs(d.v[i + 1]) - std::abs(d.v[i]);
    d.a_c[i] = std::sqrt(std::max(d.a[i] * d.a[i] - d.a_t[i] * d.a_t[i], 0.0));
  }
  d.j.resize(n - 3);
  for (std::size_t i = 0; i + 3 < n; ++i) d.j[i] = d.a[i + 1] - d.a[i];
  return d;
}

GlobalFeatureVector global_features(std::span<const double> x) {
  require_length(x.size());
  const std::size_t n = x.size();
  GlobalFeatureVector g{};

  // velocity pass
  double pos_sum = 0.0, neg_sum = 0.0, v_sum = 0.0, v_sq = 0.0, v_absmax = 0.0;
  double v_max = -INFINITY;
  std::size_t pos_n = 0, neg_n = 0, sign_changes = 0;
  int last_sign = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double v = x[i + 1] - x[i];
    v_sum += v;
    v_sq += v * v;
    v_absmax = std::max(v_absmax, std::abs(v));
    v_max = std::max(v_max, v);
    if (v > 0.0) {
      pos_sum += v;
      ++pos_n;
    } else if (v < 0.0) {
      neg_sum += v;
      ++neg_n;
    }
    const int s = (v > 0.0) - (v < 0.0);
    if (s != 0) {
      if (last_sign != 0 && s != last_sign) ++sign_changes;
      last_sign = s;
    }
  }
  const double nv = static_cast<double>(n - 1);
  const double v_mean = v_sum / nv;
  double v_var = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dv = (x[i + 1] - x[i]) - v_mean;
    v_var += dv * dv;
  }
  v_var /= nv;

  // acceleration pass
  const double na = static_cast<double>(n - 2);
  double a_sum = 0.0, a_sq = 0.0, a_abs_sum = 0.0, a_absmax = 0.0, at_sq = 0.0, ac_sq = 0.0, ac_abs_sum = 0.0;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double v0 = x[i + 1] - x[i];
    const double v1 = x[i + 2] - x[i + 1];
    const double a = v1 - v0;
    const double at = std::abs(v1) - std::abs(v0);
    const double ac = std::sqrt(std::max(a * a - at * at, 0.0));
    a_sum += a;
    a_sq += a * a;
    a_abs_sum += std::abs(a);
    a_absmax = std::max(a_absmax, std::abs(a));
    at_sq += at * at;
    ac_sq += ac * ac;
    ac_abs_sum += ac;
  }
  const double a_mean = a_sum / na;
  double a_var = 0.0;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double a = (x[i + 2] - x[i + 1]) - (x[i + 1] - x[i]);
    a_var += (a - a_mean) * (a - a_mean);
  }
  a_var /= na;

  // jerk pass
  const double nj = static_cast<double>(n - 3);
  double j_sum = 0.0, j_abs_sum = 0.0, j_sq = 0.0, j_absmax = -1.0, j_max = -INFINITY;
  std::size_t j_absmax_at = 0, j_max_at = 0;
  for (std::size_t i = 0; i + 3 < n; ++i) {
    const double v0 = x[i + 1] - x[i];
    const double v1 = x[i + 2] - x[i + 1];
    const double v2 = x[i + 3] - x[i + 2];
    const double j = (v2 - v1) - (v1 - v0);
    j_sum += j;
    j_abs_sum += std::abs(j);
    j_sq += j * j;
    if (std::abs(j) > j_absmax) {
      j_absmax = std::abs(j);
      j_absmax_at = i;
    }
    if (j > j_max) {
      j_max = j;
      j_max_at = i;
    }
  }

  const auto [x_min_it, x_max_it] = std::minmax_element(x.begin(), x.end());
  const double range = *x_max_it - *x_min_it;
  const Maxima maxima = local_maxima(x);
  const double loc_scale = static_cast<double>(n - 1);

  g[0] = pos_sum;
  g[1] = neg_sum;
  for (std::size_t k = 0; k < 3; ++k) g[2 + k] = k < maxima.top_n ? static_cast<double>(maxima.top[k]) / loc_scale : 0.0;
  g[5] = ratio(v_mean, v_absmax);
  g[6] = ratio(v_mean, v_max);
  g[7] = ratio(std::sqrt(v_sq / nv), v_absmax);
  g[8] = ratio(std::sqrt(ac_sq / na), a_absmax);
  g[9] = ratio(std::sqrt(at_sq / na), a_absmax);
  g[10] = ratio(std::sqrt(a_sq / na), a_absmax);
  g[11] = ratio(ac_abs_sum / na, a_absmax);
  g[12] = std::sqrt(v_var);
  g[13] = std::sqrt(a_var);
  g[14] = j_abs_sum / nj;
  g[15] = j_sum / nj;
  g[16] = j_absmax;
  g[17] = j_max;
  g[18] = std::sqrt(j_sq / nj);
  g[19] = static_cast<double>(j_absmax_at) / nj;
  g[20] = static_cast<double>(j_max_at) / nj;
  g[21] = static_cast<double>(sign_changes);
  g[22] = ratio(pos_sum, -neg_sum);
  g[23] = ratio(static_cast<double>(pos_n), static_cast<double>(neg_n));
  g[24] = range;
  g[25] = ratio(v_mean, range);
  g[26] = static_cast<double>(maxima.count);
  g[27] = a_abs_sum / na;
  return g;
}

Matrix global_vector(const Matrix& local) {
  Matrix out(local.rows(), kGlobalFeatures);
  for (std::size_t r = 0; r < local.rows(); ++r) {
    const auto g = global_features(local.row(r));
    std::copy(g.begin(), g.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> window_features(const WindowSample& w, const std::vector<Category>& cats, bool global) {
  std::vector<double> out;
  for (Category c : cats) {
    if (!w.has(c)) {
      throw Error(ErrorKind::MissingCategory, "window " + w.user_id + "@" + std::to_string(w.start_second) + " lacks category " + std::string(name(c)));
    }
    const Matrix& local = w.local_vector(c);
    if (global) {
      for (std::size_t r = 0; r < local.rows(); ++r) {
        const auto g = global_features(local.row(r));
        out.insert(out.end(), g.begin(), g.end());
      }
    } else {
      out.insert(out.end(), local.data().begin(), local.data().end());
    }
  }
  return out;
}

}  // namespace attnfuse
