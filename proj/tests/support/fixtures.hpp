#pragma once

// Shared synthetic inputs for the unit and acceptance tests.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "attnfuse/matrix.hpp"
#include "attnfuse/window.hpp"

namespace fixture {

struct Labeled {
  std::vector<std::vector<double>> X;
  std::vector<int> high;  // 1 for High, 0 for Low

  attnfuse::Matrix matrix() const {
    attnfuse::Matrix m(X.size(), X.empty() ? 0 : X[0].size());
    for (std::size_t i = 0; i < X.size(); ++i) {
      for (std::size_t k = 0; k < X[i].size(); ++k) m(i, k) = X[i][k];
    }
    return m;
  }
  std::vector<attnfuse::Label> labels() const {
    std::vector<attnfuse::Label> y;
    for (int h : high) y.push_back(h ? attnfuse::Label::High : attnfuse::Label::Low);
    return y;
  }
  std::vector<int> signs() const {
    std::vector<int> s;
    for (int h : high) s.push_back(h ? 1 : -1);
    return s;
  }
};

// n points in d dimensions with overlapping classes; both classes present.
inline Labeled svm_instance(unsigned seed, std::size_t n = 8, std::size_t d = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Labeled out;
  for (std::size_t i = 0; i < n; ++i) {
    const int h = i % 2;
    std::vector<double> x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = z(rng) * (1.0 + k) + (h ? 0.8 : -0.8) + 3.0 * k;
    out.X.push_back(x);
    out.high.push_back(h);
  }
  return out;
}

// Four Gaussian blobs with labels y = xor of the quadrant signs.
inline Labeled xor_instance(unsigned seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 0.15);
  Labeled out;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    out.X.push_back({(a ? 1.0 : -1.0) + z(rng), (b ? 1.0 : -1.0) + z(rng)});
    out.high.push_back(a ^ b);
  }
  return out;
}

// n x 7 score matrix in [0,1]. Columns 0 and 1 carry an XOR interaction,
// the rest are uniform noise.
inline Labeled xor_scores(unsigned seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Labeled out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(7);
    for (double& v : s) v = u(rng);
    out.X.push_back(s);
    out.high.push_back((s[0] > 0.5) != (s[1] > 0.5));
  }
  return out;
}

// 700 noise features and 28 features whose mean shifts by `shift` between
// the classes, at columns 0, 26, 52, ... (every 26th).
inline Labeled dp_planted(unsigned seed, std::size_t n, double shift, std::vector<std::size_t>* informative) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Labeled out;
  std::vector<bool> planted(728, false);
  informative->clear();
  for (std::size_t k = 0; k < 28; ++k) {
    planted[k * 26] = true;
    informative->push_back(k * 26);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int h = int(i % 2);
    std::vector<double> x(728);
    for (std::size_t k = 0; k < 728; ++k) x[k] = z(rng) * (1.0 + double(k % 5)) + (planted[k] && h ? shift * (1.0 + double(k % 5)) : 0.0);
    out.X.push_back(x);
    out.high.push_back(h);
  }
  return out;
}

}  // namespace fixture
