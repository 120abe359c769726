#include "attnfuse/fuse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attnfuse/error.hpp"
#include "attnfuse/kernels.hpp"

namespace attnfuse {

std::string_view name(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::None: return "none";
    case FusionStrategy::Sum: return "sum";
    case FusionStrategy::NeuralNet: return "nn";
    case FusionStrategy::DpSelect: return "dp";
  }
  return "?";
}

std::string_view name(FeatureMode m) { return m == FeatureMode::Local ? "local" : "global"; }

void FusionSpec::validate() const {
  if (categories.empty()) throw Error(ErrorKind::InvalidConfig, "fusion needs at least one category");
  if (strategy == FusionStrategy::DpSelect && feature_mode != FeatureMode::Global) {
    throw Error(ErrorKind::InvalidConfig, "dp fusion requires global features");
  }
  if (strategy == FusionStrategy::NeuralNet && categories.size() != kNumCategories) {
    throw Error(ErrorKind::InvalidConfig, "nn fusion consumes the scores of all 7 categories");
  }
  if (strategy == FusionStrategy::None && categories.size() != 1) {
    throw Error(ErrorKind::InvalidConfig, "fusion 'none' evaluates exactly one category");
  }
  if (!(dp_fraction > 0.0 && dp_fraction <= 1.0)) throw Error(ErrorKind::InvalidConfig, "dp fraction must lie in (0,1]");
}

double score_sum(const std::map<Category, double>& scores, std::span<const Category> categories) {
  if (categories.empty()) throw Error(ErrorKind::MissingCategory, "score sum over no categories");
  double s = 0.0;
  for (Category c : categories) {
    auto it = scores.find(c);
    if (it == scores.end()) throw Error(ErrorKind::MissingCategory, "no score for category " + std::string(name(c)));
    s += it->second;
  }
  return s / static_cast<double>(categories.size());
}

double nn_fuse(const MlpFusionModel& model, std::span<const double> scores) {
  if (scores.size() != kNumCategories) {
    throw Error(ErrorKind::WrongArity, "nn fusion expects 7 scores, got " + std::to_string(scores.size()));
  }
  return mlp_forward(model, scores, false);
}

DpStats dp_rank(const Matrix& X, std::span<const Label> y) {
  if (X.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "sample and label counts differ");
  const std::size_t D = X.cols();
  std::array<std::vector<double>, 2> mean{std::vector<double>(D, 0.0), std::vector<double>(D, 0.0)};
  std::array<std::size_t, 2> count{0, 0};
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    kernels::axpy(1.0, X.row(i), mean[c]);
    ++count[c];
  }
  if (count[0] == 0 || count[1] == 0) throw Error(ErrorKind::SingleClassInput, "discrimination power needs both classes");
  const double n = static_cast<double>(X.rows());
  std::vector<double> overall(D, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t d = 0; d < D; ++d) {
      overall[d] += mean[c][d];
      mean[c][d] /= static_cast<double>(count[c]);
    }
  }
  for (double& v : overall) v /= n;

  DpStats st;
  st.inter.assign(D, 0.0);
  st.intra.assign(D, 0.0);
  st.dp.assign(D, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t d = 0; d < D; ++d) {
      const double diff = mean[c][d] - overall[d];
      st.inter[d] += static_cast<double>(count[c]) * diff * diff;
    }
  }
  for (std::size_t i = 0; i < X.rows(); ++i) kernels::add_squared_diff(st.intra, X.row(i), mean[static_cast<std::size_t>(y[i])]);
  for (std::size_t d = 0; d < D; ++d) {
    st.inter[d] /= n;
    st.intra[d] /= n;
    // Relative floor so that rounding noise in identical class means reads as zero.
    const double scale = std::max(std::abs(mean[0][d]), std::abs(mean[1][d]));
    const bool means_differ = std::abs(mean[0][d] - mean[1][d]) > 1e-12 * std::max(scale, 1e-300);
    if (st.intra[d] > 0.0) {
      st.dp[d] = means_differ ? std::min(st.inter[d] / st.intra[d], kDpCap) : 0.0;
    } else {
      st.dp[d] = means_differ ? kDpCap : 0.0;
    }
  }
  return st;
}

std::size_t dp_selection_size(double fraction, std::size_t features) {
  if (features == 0) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(features) - 1e-9));
  return std::clamp<std::size_t>(k, 1, features);
}

DpStats dp_select(const Matrix& X, std::span<const Label> y, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorKind::InvalidConfig, "dp fraction must lie in (0,1]");
  DpStats st = dp_rank(X, y);
  const std::size_t k = dp_selection_size(fraction, X.cols());
  std::vector<std::size_t> order(X.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return st.dp[a] > st.dp[b]; });
  st.selected.assign(order.begin(), order.begin() + static_cast<long>(k));
  std::sort(st.selected.begin(), st.selected.end());
  return st;
}

Matrix select_columns(const Matrix& X, std::span<const std::size_t> columns) {
  Matrix out(X.rows(), columns.size());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    auto src = X.row(r);
    auto dst = out.row(r);
    for (std::size_t k = 0; k < columns.size(); ++k) dst[k] = src[columns[k]];
  }
  return out;
}

}  // namespace attnfuse
