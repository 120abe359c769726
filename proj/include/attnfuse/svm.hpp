#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/matrix.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

struct SvmOptions {
  double C = 1.0;
  double tol = 1e-3;
  // Cap on pair updates of the dual solver.
  std::size_t max_updates = 100000;
};

// Linear classifier over internally standardized inputs:
//   score(x) = w . ((x - mean) / std) + b,  positive => High.
struct LinearSvmModel {
  std::vector<double> w;
  double b = 0.0;
  double C = 1.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;  // 1 for constant features

  // Weights folded onto raw inputs; rebuilt by finalize().
  std::vector<double> raw_w;
  double raw_b = 0.0;

  void finalize();
  std::size_t dimension() const noexcept { return w.size(); }
  double score(std::span<const double> x) const;
  // Standardized input, skipping the affine transform.
  double score_standardized(std::span<const double> z) const;
};

struct SvmTrainInfo {
  std::size_t passes = 0;
  std::size_t updates = 0;
  std::size_t scanned = 0;  // rows visited by gradient scans
  bool converged = false;
  double max_violation = 0.0;
  double dual_objective = 0.0;    // 1/2 |w|^2 - sum(alpha), at exit
  double primal_objective = 0.0;  // 1/2 |w|^2 + C sum hinge, at exit
  std::vector<double> dual_trace;  // dual objective at the start of every pass and at exit
  std::vector<double> alpha;
};

struct SvmTrainResult {
  LinearSvmModel model;
  SvmTrainInfo info;
};

// Minimizes 1/2 |w|^2 + C sum_i max(0, 1 - y_i (w . z_i + b)) over the
// standardized samples z_i with an unregularized bias. The dual is solved by
// pairwise coordinate descent, stopping when the maximal KKT violation drops
// below tol or after max_updates pair updates. warm_alpha, when given, must be
// dual-feasible for this C.
SvmTrainResult train_linear_svm(const Matrix& X, std::span<const Label> y, const SvmOptions& options,
                                std::span<const double> warm_alpha = {});

// Primal objective of (w, b) on already standardized samples.
double svm_primal_objective(const Matrix& Z, std::span<const Label> y, std::span<const double> w, double b, double C);

// 1e-8, 1e-7, ..., 1e2
std::vector<double> default_c_grid();

struct GridSearchOptions {
  std::vector<double> grid = default_c_grid();
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  SvmOptions svm;
};

struct GridSearchResult {
  double best_c = 0.0;
  LinearSvmModel model;
  std::vector<double> validation_accuracy;  // one per evaluated grid value, ascending C
  std::vector<std::string> validation_groups;
  bool grouped_split = true;
};

// Inner split: validation_fraction of the distinct groups (users), chosen by a
// seeded shuffle, are held out. Falls back to a stratified per-sample split
// when the grouped split leaves a side without both classes. C values are
// tried in ascending order; only converged fits are eligible and the sweep
// stops at the first fit that hits the update cap (the smallest C is kept if
// even it does not converge). Ties in validation accuracy go to the smallest
// C. The returned model is refit on all of X with the selected C.
GridSearchResult grid_search_c(const Matrix& X, std::span<const Label> y, std::span<const std::string> groups,
                               const GridSearchOptions& options);

// Min-max map of raw scores onto [0,1] using the training-fold range.
struct ScoreNormalizer {
  double min = 0.0;
  double max = 1.0;

  static ScoreNormalizer fit(std::span<const double> train_scores);
  double operator()(double raw) const;
};

}  // namespace attnfuse
