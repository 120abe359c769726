#pragma once

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "attnfuse/category.hpp"
#include "attnfuse/matrix.hpp"
#include "attnfuse/mlp.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

enum class FusionStrategy { None, Sum, NeuralNet, DpSelect };
enum class FeatureMode { Local, Global };

std::string_view name(FusionStrategy s);
std::string_view name(FeatureMode m);

struct FusionSpec {
  FusionStrategy strategy = FusionStrategy::Sum;
  std::vector<Category> categories{kAllCategories.begin(), kAllCategories.end()};
  FeatureMode feature_mode = FeatureMode::Local;
  double dp_fraction = 0.10;

  // Throws InvalidConfig.
  void validate() const;
};

// Mean of the normalized scores of `categories`. Throws MissingCategory.
double score_sum(const std::map<Category, double>& scores, std::span<const Category> categories);

// Scores in the fixed category order. Throws WrongArity unless 7 are given.
double nn_fuse(const MlpFusionModel& model, std::span<const double> scores);

// Returned in place of dp when the intra-class variance is zero but the
// class means differ.
inline constexpr double kDpCap = 1e12;

struct DpStats {
  std::vector<double> inter;  // sum_c n_c (mu_c - mu)^2 / n
  std::vector<double> intra;  // sum_c sum_{i in c} (x_i - mu_c)^2 / n
  std::vector<double> dp;
  std::vector<std::size_t> selected;  // ascending feature indices
};

DpStats dp_rank(const Matrix& X, std::span<const Label> y);

// ceil(fraction * D), at least 1.
std::size_t dp_selection_size(double fraction, std::size_t features);

// Keeps the dp_selection_size() features of highest dp, ties to the lower index.
DpStats dp_select(const Matrix& X, std::span<const Label> y, double fraction);

Matrix select_columns(const Matrix& X, std::span<const std::size_t> columns);

}  // namespace attnfuse
