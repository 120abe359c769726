#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attnfuse/fuse.hpp"
#include "attnfuse/mlp.hpp"
#include "attnfuse/svm.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

struct ThresholdResult {
  double threshold = 0.0;  // predict High when score >= threshold
  double accuracy = 0.0;
};

// Sweeps -inf, the midpoints of adjacent distinct scores, and +inf; returns the
// threshold of maximal accuracy, the smallest on ties. Throws SingleClassInput.
ThresholdResult max_accuracy_threshold(std::span<const double> scores, std::span<const Label> labels);

double accuracy_at(std::span<const double> scores, std::span<const Label> labels, double threshold);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (FPR, TPR) from (0,0) to (1,1)
  double auc = 0.0;
};

// High is the positive class. Tied scores form a single step. Throws SingleClassInput.
RocCurve roc(std::span<const double> scores, std::span<const Label> labels);

// ---------------------------------------------------------------------------
// Leave-one-user-out protocol

struct WindowDataset {
  int window_length = 0;
  // Sorted by (user_id, start_second). Labels are relative to dump_thresholds.
  std::vector<WindowSample> windows;
  Thresholds dump_thresholds;
  // Held-out user -> labeling thresholds for that fold. Users missing here use
  // dump_thresholds.
  std::map<std::string, Thresholds> fold_thresholds;
  // True when the thresholds were computed over every user, held-out included.
  bool thresholds_include_held_out = false;
  // Counts under dump_thresholds.
  WindowStats stats;

  std::vector<std::string> users() const;
};

struct LoocvOptions {
  FusionSpec fusion;
  GridSearchOptions grid;
  MlpHyper mlp;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool strict_leakage = false;
};

// Per-window feature vectors for every category present in the dataset,
// rows aligned with WindowDataset::windows.
struct FeatureTable {
  FeatureMode mode = FeatureMode::Local;
  std::array<Matrix, kNumCategories> by_category;

  static FeatureTable build(const WindowDataset& data, FeatureMode mode, const std::vector<Category>& cats);
  // Concatenation over cats in category order.
  Matrix concatenated(const std::vector<Category>& cats, std::span<const std::size_t> rows) const;
};

struct CategoryModel {
  Category category = Category::EB;
  LinearSvmModel svm;
  ScoreNormalizer normalizer;
  std::vector<double> validation_accuracy;
};

struct FoldModel {
  std::string held_out_user;
  Thresholds thresholds;
  FusionStrategy strategy = FusionStrategy::Sum;
  std::vector<CategoryModel> categories;  // Sum, NeuralNet, None
  std::optional<MlpFusionModel> mlp;      // NeuralNet
  std::vector<std::size_t> dp_selected;   // DpSelect, indices into the concatenated global vector
  std::optional<LinearSvmModel> dp_svm;
  ScoreNormalizer dp_normalizer;
  double heldout_threshold = 0.0;  // max-accuracy threshold on the training scores
  std::size_t train_windows = 0;
};

struct FoldResult {
  std::string held_out_user;
  Thresholds thresholds;
  std::vector<int> start_seconds;
  std::vector<Label> labels;
  std::vector<double> scores;                    // fused s^F
  std::vector<std::vector<double>> category_scores;  // per fusion category, normalized
  double heldout_threshold = 0.0;
  double heldout_accuracy = 0.0;
  double oracle_threshold = 0.0;
  double oracle_accuracy = 0.0;
  std::optional<double> auc;  // absent for single-class folds
  std::vector<double> chosen_c;  // per category, or the single fused SVM
  std::vector<std::size_t> dp_selected;
  std::size_t train_windows = 0;
};

struct UnimodalSummary {
  Category category = Category::EB;
  double oracle_accuracy = 0.0;
  double auc = 0.0;
};

struct EvalReport {
  std::string config_json;  // canonical experiment configuration
  std::string config_hash;
  std::uint64_t seed = 0;
  int window_length = 0;
  std::size_t windows_total = 0;
  std::size_t windows_high = 0;
  std::size_t windows_low = 0;
  WindowStats window_stats;
  std::vector<FoldResult> folds;
  std::vector<std::pair<std::string, std::string>> skipped;  // user, reason
  std::size_t pooled_windows = 0;
  double pooled_oracle_threshold = 0.0;
  double pooled_oracle_accuracy = 0.0;
  double pooled_heldout_accuracy = 0.0;
  double mean_user_oracle_accuracy = 0.0;
  double mean_user_heldout_accuracy = 0.0;
  RocCurve pooled_roc;
  std::vector<UnimodalSummary> unimodal;
};

// Labels of every window under the given fold thresholds (nullopt = unlabeled).
std::vector<std::optional<Label>> fold_labels(const WindowDataset& data, const Thresholds& thresholds);

Thresholds thresholds_for(const WindowDataset& data, const std::string& held_out_user);

// Trains every model of the fold that holds out `held_out_user`.
FoldModel train_fold(const WindowDataset& data, const FeatureTable& features, const std::string& held_out_user,
                     const LoocvOptions& options);

// Scores the held-out user's windows with a trained fold model.
FoldResult score_fold(const WindowDataset& data, const FeatureTable& features, const FoldModel& model,
                      const LoocvOptions& options);

// Deterministic per-fold seed derived from the run seed and the user id.
std::uint64_t fold_seed(std::uint64_t seed, const std::string& user);

// Runs every fold (in parallel when options.threads > 1) and pools results.
// When `models` is non-empty the matching fold models are used instead of
// training; `trained`, when given, receives the fold models.
EvalReport loocv(const WindowDataset& data, const LoocvOptions& options, const std::map<std::string, FoldModel>& models = {},
                 std::vector<FoldModel>* trained = nullptr);

}  // namespace attnfuse
