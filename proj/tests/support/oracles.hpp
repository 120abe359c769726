#pragma once

// Straight-line reference implementations used as test oracles. They follow
// the definitions directly and share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

inline std::vector<double> diff(const std::vector<double>& x) {
  std::vector<double> d;
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / x.size();
}

inline double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / x.size());
}

inline double pstd(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return x.empty() ? 0.0 : std::sqrt(s / x.size());
}

inline double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

// Indices of local maxima: strictly above the left neighbour and, after any
// run of equal values, strictly above the right neighbour. Reported at the
// first index of the run.
inline std::vector<std::size_t> local_maxima(const std::vector<double>& x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (!(x[i - 1] < x[i])) continue;
    std::size_t k = i;
    while (k + 1 < x.size() && x[k + 1] == x[i]) ++k;
    if (k + 1 < x.size() && x[k + 1] < x[i]) out.push_back(i);
  }
  return out;
}

inline std::array<double, 28> global_features(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const auto v = diff(x);
  const auto a = diff(v);
  std::vector<double> speed;
  for (double e : v) speed.push_back(std::fabs(e));
  const auto at = diff(speed);
  std::vector<double> ac;
  for (std::size_t i = 0; i < a.size(); ++i) ac.push_back(std::sqrt(std::max(a[i] * a[i] - at[i] * at[i], 0.0)));
  const auto j = diff(a);

  std::array<double, 28> g{};
  for (double e : v) {
    if (e > 0) g[0] += e;
    if (e < 0) g[1] += e;
  }
  auto maxima = local_maxima(x);
  std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t p, std::size_t q) { return x[p] > x[q]; });
  for (std::size_t k = 0; k < 3; ++k) g[2 + k] = k < maxima.size() ? double(maxima[k]) / double(n - 1) : 0.0;
  const double vmax_abs = max_abs(v);
  const double vmax = *std::max_element(v.begin(), v.end());
  const double amax_abs = max_abs(a);
  g[5] = ratio(mean(v), vmax_abs);
  g[6] = ratio(mean(v), vmax);
  g[7] = ratio(rms(v), vmax_abs);
  g[8] = ratio(rms(ac), amax_abs);
  g[9] = ratio(rms(at), amax_abs);
  g[10] = ratio(rms(a), amax_abs);
  double mac = 0.0;
  for (double e : ac) mac += std::fabs(e);
  g[11] = ratio(mac / ac.size(), amax_abs);
  g[12] = pstd(v);
  g[13] = pstd(a);
  double sj = 0.0, sabs = 0.0;
  std::size_t arg_abs = 0, arg = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    sabs += std::fabs(j[i]);
    sj += j[i];
    if (std::fabs(j[i]) > std::fabs(j[arg_abs])) arg_abs = i;
    if (j[i] > j[arg]) arg = i;
  }
  g[14] = sabs / j.size();
  g[15] = sj / j.size();
  g[16] = max_abs(j);
  g[17] = *std::max_element(j.begin(), j.end());
  g[18] = rms(j);
  g[19] = double(arg_abs) / double(j.size());
  g[20] = double(arg) / double(j.size());
  int prev = 0, changes = 0;
  for (double e : v) {
    const int s = e > 0 ? 1 : (e < 0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  g[21] = changes;
  double pos = 0.0, neg = 0.0;
  int npos = 0, nneg = 0;
  for (double e : v) {
    if (e > 0) {
      pos += e;
      ++npos;
    }
    if (e < 0) {
      neg += -e;
      ++nneg;
    }
  }
  g[22] = ratio(pos, neg);
  g[23] = ratio(npos, nneg);
  const double range = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
  g[24] = range;
  g[25] = ratio(mean(v), range);
  g[26] = double(local_maxima(x).size());
  double maa = 0.0;
  for (double e : a) maa += std::fabs(e);
  g[27] = maa / a.size();
  return g;
}

inline double percentile(std::vector<double> pool, double p) {
  std::sort(pool.begin(), pool.end());
  const double rank = p / 100.0 * double(pool.size() - 1);
  const std::size_t lo = std::size_t(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, pool.size() - 1);
  return pool[lo] + (rank - double(lo)) * (pool[hi] - pool[lo]);
}

// Threshold sweep by brute force: every candidate is scored from scratch.
struct Sweep {
  double threshold;
  double accuracy;
};

inline Sweep max_accuracy(const std::vector<double>& s, const std::vector<int>& high) {
  std::vector<double> u = s;
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> cand{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < u.size(); ++i) cand.push_back((u[i] + u[i + 1]) / 2.0);
  cand.push_back(std::numeric_limits<double>::infinity());
  Sweep best{0.0, -1.0};
  for (double t : cand) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < s.size(); ++i) ok += (s[i] >= t) == (high[i] == 1);
    const double acc = double(ok) / double(s.size());
    if (acc > best.accuracy) best = {t, acc};
  }
  return best;
}

// Soft-margin linear SVM with unregularized bias on standardized features.
// The dual is solved by projected gradient ascent, projecting onto the box
// intersected with sum(alpha*y) = 0 by bisection. The primal value is then
// evaluated at the exact optimal bias (minimum over hinge breakpoints).
struct SvmSolution {
  std::vector<double> w;
  double b = 0.0;
  double primal = 0.0;
  double dual = 0.0;
};

inline std::vector<std::vector<double>> standardized(const std::vector<std::vector<double>>& X) {
  const std::size_t n = X.size(), d = X[0].size();
  std::vector<std::vector<double>> Z = X;
  for (std::size_t k = 0; k < d; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += X[i][k];
    m /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (X[i][k] - m) * (X[i][k] - m);
    double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * (1.0 + std::fabs(m)))) sd = 1.0;
    for (std::size_t i = 0; i < n; ++i) Z[i][k] = (X[i][k] - m) / sd;
  }
  return Z;
}

inline double primal_at(const std::vector<std::vector<double>>& Z, const std::vector<int>& y, const std::vector<double>& w, double b,
                        double C) {
  double obj = 0.0;
  for (double e : w) obj += 0.5 * e * e;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    double s = b;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * Z[i][k];
    obj += C * std::max(0.0, 1.0 - y[i] * s);
  }
  return obj;
}

inline SvmSolution svm_dual(const std::vector<std::vector<double>>& X, const std::vector<int>& y, double C, int iters = 20000) {
  const auto Z = standardized(X);
  const std::size_t n = Z.size(), d = Z[0].size();
  std::vector<std::vector<double>> Q(n, std::vector<double>(n));
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double k = 0.0;
      for (std::size_t c = 0; c < d; ++c) k += Z[i][c] * Z[j][c];
      Q[i][j] = y[i] * y[j] * k;
    }
    trace += Q[i][i];
  }
  const double step = 1.0 / std::max(trace, 1e-12);
  auto project = [&](std::vector<double> v) {
    auto at = [&](double lam) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += y[i] * std::clamp(v[i] - lam * y[i], 0.0, C);
      return s;
    };
    double lo = -1e6, hi = 1e6;  // at() is nonincreasing in lam
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (at(mid) > 0 ? lo : hi) = mid;
    }
    const double lam = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lam * y[i], 0.0, C);
    return v;
  };
  // Accelerated (FISTA) projected gradient ascent.
  std::vector<double> alpha(n, 0.0), yk = alpha, next(n);
  double tk = 1.0;
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double qa = 0.0;
      for (std::size_t j = 0; j < n; ++j) qa += Q[i][j] * yk[j];
      next[i] = yk[i] + step * (1.0 - qa);
    }
    const auto a_new = project(next);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    for (std::size_t i = 0; i < n; ++i) yk[i] = a_new[i] + (tk - 1.0) / t_new * (a_new[i] - alpha[i]);
    alpha = a_new;
    tk = t_new;
  }
  SvmSolution sol;
  sol.w.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) sol.w[c] += alpha[i] * y[i] * Z[i][c];
  }
  double wsq = 0.0;
  for (double e : sol.w) wsq += e * e;
  sol.dual = std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * wsq;
  // Piecewise-linear convex in b: the minimum sits on a breakpoint.
  sol.primal = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += sol.w[c] * Z[i][c];
    const double b = y[i] - s;
    const double p = primal_at(Z, y, sol.w, b, C);
    if (p < sol.primal) {
      sol.primal = p;
      sol.b = b;
    }
  }
  return sol;
}

// Fraction of windows of w i.i.d. U(0,100) seconds whose mean is at most
// low or at least high.
inline double labeled_fraction_mc(int w, double low, double high, std::size_t trials, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::size_t hit = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    double s = 0.0;
    for (int k = 0; k < w; ++k) s += u(rng);
    const double m = s / w;
    hit += (m <= low || m >= high);
  }
  return double(hit) / double(trials);
}

// Fisher-style ratio of between-class to within-class variance for one
// feature, both normalized by the total count.
inline double discrimination_power(const std::vector<double>& x, const std::vector<int>& high, double cap = 1e12) {
  double m[2] = {0, 0}, n[2] = {0, 0}, all = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[high[i]] += x[i];
    n[high[i]] += 1;
    all += x[i];
  }
  all /= double(x.size());
  m[0] /= n[0];
  m[1] /= n[1];
  double inter = 0, intra = 0;
  for (int c = 0; c < 2; ++c) inter += n[c] * (m[c] - all) * (m[c] - all);
  for (std::size_t i = 0; i < x.size(); ++i) intra += (x[i] - m[high[i]]) * (x[i] - m[high[i]]);
  if (m[0] == m[1]) return 0.0;
  if (intra == 0.0) return cap;
  return std::min(inter / intra, cap);
}

// Area under the ROC curve as the Mann-Whitney statistic, ties counted half.
inline double auc(const std::vector<double>& s, const std::vector<int>& high) {
  double pairs = 0, wins = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!high[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (high[j]) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Training accuracy of logistic regression fitted by Newton's method.
inline double logistic_accuracy(const std::vector<std::vector<double>>& X, const std::vector<int>& high, int iters = 50) {
  const std::size_t n = X.size(), d = X[0].size() + 1;
  std::vector<double> beta(d, 0.0);
  auto row = [&](std::size_t i, std::size_t k) { return k + 1 == d ? 1.0 : X[i][k]; };
  for (int it = 0; it < iters; ++it) {
    std::vector<double> g(d, 0.0);
    std::vector<std::vector<double>> H(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0;
      for (std::size_t k = 0; k < d; ++k) z += beta[k] * row(i, k);
      const double p = 1.0 / (1.0 + std::exp(-z));
      for (std::size_t k = 0; k < d; ++k) {
        g[k] += (p - high[i]) * row(i, k);
        for (std::size_t l = 0; l < d; ++l) H[k][l] += p * (1 - p) * row(i, k) * row(i, l);
      }
    }
    for (std::size_t k = 0; k < d; ++k) H[k][k] += 1e-6;
    // Gaussian elimination on H step = g.
    for (std::size_t c = 0; c < d; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < d; ++r) {
        if (std::fabs(H[r][c]) > std::fabs(H[piv][c])) piv = r;
      }
      std::swap(H[c], H[piv]);
      std::swap(g[c], g[piv]);
      for (std::size_t r = c + 1; r < d; ++r) {
        const double f = H[r][c] / H[c][c];
        for (std::size_t l = c; l < d; ++l) H[r][l] -= f * H[c][l];
        g[r] -= f * g[c];
      }
    }
    std::vector<double> step(d);
    for (std::size_t c = d; c-- > 0;) {
      double v = g[c];
      for (std::size_t l = c + 1; l < d; ++l) v -= H[c][l] * step[l];
      step[c] = v / H[c][c];
    }
    for (std::size_t k = 0; k < d; ++k) beta[k] -= step[k];
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0;
    for (std::size_t k = 0; k < d; ++k) z += beta[k] * row(i, k);
    ok += (z >= 0) == (high[i] == 1);
  }
  return double(ok) / double(n);
}

}  // namespace oracle
