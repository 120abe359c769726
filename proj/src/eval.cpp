#include "attnfuse/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "attnfuse/error.hpp"
#include "attnfuse/globalfeat.hpp"
#include "attnfuse/hash.hpp"

namespace attnfuse {
namespace {

void require_both(std::span<const Label> labels) {
  const bool hi = std::any_of(labels.begin(), labels.end(), [](Label l) { return l == Label::High; });
  const bool lo = std::any_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Low; });
  if (!hi || !lo) throw Error(ErrorKind::SingleClassInput, "both Low and High labels are required");
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return idx;
}

}  // namespace

ThresholdResult max_accuracy_threshold(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "score and label counts differ");
  require_both(labels);
  const auto idx = order_by_score(scores);
  const double n = static_cast<double>(scores.size());
  long correct = std::count(labels.begin(), labels.end(), Label::High);
  ThresholdResult best{-INFINITY, static_cast<double>(correct) / n};
  std::size_t k = 0;
  while (k < idx.size()) {
    const double value = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == value) {
      correct += labels[idx[k]] == Label::Low ? 1 : -1;
      ++k;
    }
    double tau = INFINITY;
    if (k < idx.size()) {
      const double next = scores[idx[k]];
      tau = value + 0.5 * (next - value);
      if (!(tau > value)) tau = next;
    }
    const double acc = static_cast<double>(correct) / n;
    if (acc > best.accuracy) best = {tau, acc};
  }
  return best;
}

double accuracy_at(std::span<const double> scores, std::span<const Label> labels, double threshold) {
  if (scores.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const Label pred = scores[i] >= threshold ? Label::High : Label::Low;
    correct += pred == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

RocCurve roc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "score and label counts differ");
  require_both(labels);
  const double P = static_cast<double>(std::count(labels.begin(), labels.end(), Label::High));
  const double N = static_cast<double>(labels.size()) - P;
  auto idx = order_by_score(scores);
  std::reverse(idx.begin(), idx.end());
  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  double tp = 0.0, fp = 0.0;
  std::size_t k = 0;
  while (k < idx.size()) {
    const double value = scores[idx[k]];
    while (k < idx.size() && scores[idx[k]] == value) {
      (labels[idx[k]] == Label::High ? tp : fp) += 1.0;
      ++k;
    }
    const auto prev = curve.points.back();
    const std::pair<double, double> pt{fp / N, tp / P};
    curve.auc += (pt.first - prev.first) * (pt.second + prev.second) * 0.5;
    curve.points.push_back(pt);
  }
  return curve;
}

std::vector<std::string> WindowDataset::users() const {
  std::vector<std::string> out;
  for (const auto& w : windows) {
    if (out.empty() || out.back() != w.user_id) out.push_back(w.user_id);
  }
  for (const auto& [user, t] : fold_thresholds) {
    if (std::find(out.begin(), out.end(), user) == out.end()) out.push_back(user);
  }
  std::sort(out.begin(), out.end());
  return out;
}

FeatureTable FeatureTable::build(const WindowDataset& data, FeatureMode mode, const std::vector<Category>& cats) {
  FeatureTable t;
  t.mode = mode;
  for (Category c : cats) {
    const std::size_t n = data.windows.size();
    if (n == 0) continue;
    const std::size_t d = mode == FeatureMode::Global ? dimension(c) * kGlobalFeatures : dimension(c) * static_cast<std::size_t>(data.window_length);
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = window_features(data.windows[i], {c}, mode == FeatureMode::Global);
      if (f.size() != d) {
        throw Error(ErrorKind::DimensionMismatch, "window " + data.windows[i].user_id + "@" + std::to_string(data.windows[i].start_second) +
                                                      " has " + std::to_string(f.size()) + " features for " + std::string(name(c)) + ", expected " + std::to_string(d));
      }
      std::copy(f.begin(), f.end(), m.row(i).begin());
    }
    t.by_category[index_of(c)] = std::move(m);
  }
  return t;
}

Matrix FeatureTable::concatenated(const std::vector<Category>& cats, std::span<const std::size_t> rows) const {
  std::size_t d = 0;
  for (Category c : cats) d += by_category[index_of(c)].cols();
  Matrix out(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto dst = out.row(r).begin();
    for (Category c : cats) {
      auto src = by_category[index_of(c)].row(rows[r]);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

std::vector<std::optional<Label>> fold_labels(const WindowDataset& data, const Thresholds& thresholds) {
  std::vector<std::optional<Label>> out(data.windows.size());
  for (std::size_t i = 0; i < data.windows.size(); ++i) out[i] = label_for(data.windows[i].band_attention, thresholds);
  return out;
}

Thresholds thresholds_for(const WindowDataset& data, const std::string& held_out_user) {
  auto it = data.fold_thresholds.find(held_out_user);
  return it == data.fold_thresholds.end() ? data.dump_thresholds : it->second;
}

std::uint64_t fold_seed(std::uint64_t seed, const std::string& user) { return derive_seed(seed, user); }

namespace {

struct FoldRows {
  std::vector<std::size_t> train, test;
  std::vector<Label> train_labels, test_labels;
  std::vector<std::string> train_users;
};

FoldRows split_rows(const WindowDataset& data, const std::string& held_out, const Thresholds& thresholds) {
  FoldRows rows;
  const auto labels = fold_labels(data, thresholds);
  for (std::size_t i = 0; i < data.windows.size(); ++i) {
    if (!labels[i]) continue;
    if (data.windows[i].user_id == held_out) {
      rows.test.push_back(i);
      rows.test_labels.push_back(*labels[i]);
    } else {
      rows.train.push_back(i);
      rows.train_labels.push_back(*labels[i]);
      rows.train_users.push_back(data.windows[i].user_id);
    }
  }
  return rows;
}

Matrix category_rows(const FeatureTable& features, Category c, std::span<const std::size_t> rows) {
  return features.concatenated({c}, rows);
}

// Normalized per-category scores (rows x categories) and fused scores.
struct Scored {
  Matrix per_category;
  std::vector<double> fused;
};

Scored apply(const FoldModel& model, const FeatureTable& features, const FusionSpec& spec, std::span<const std::size_t> rows) {
  Scored out;
  out.fused.resize(rows.size());
  if (model.strategy == FusionStrategy::DpSelect) {
    const Matrix X = select_columns(features.concatenated(spec.categories, rows), model.dp_selected);
    for (std::size_t r = 0; r < rows.size(); ++r) out.fused[r] = model.dp_normalizer(model.dp_svm->score(X.row(r)));
    return out;
  }
  out.per_category = Matrix(rows.size(), model.categories.size());
  for (std::size_t k = 0; k < model.categories.size(); ++k) {
    const auto& cm = model.categories[k];
    const Matrix& X = features.by_category[index_of(cm.category)];
    for (std::size_t r = 0; r < rows.size(); ++r) out.per_category(r, k) = cm.normalizer(cm.svm.score(X.row(rows[r])));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto s = out.per_category.row(r);
    switch (model.strategy) {
      case FusionStrategy::NeuralNet:
        out.fused[r] = nn_fuse(*model.mlp, s);
        break;
      case FusionStrategy::Sum:
      case FusionStrategy::None:
      default:
        out.fused[r] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
        break;
    }
  }
  return out;
}

}  // namespace

FoldModel train_fold(const WindowDataset& data, const FeatureTable& features, const std::string& held_out_user,
                     const LoocvOptions& options) {
  const FusionSpec& spec = options.fusion;
  if (options.strict_leakage && data.thresholds_include_held_out) {
    throw Error(ErrorKind::ProtocolViolation, "labeling thresholds were computed with the held-out user included");
  }
  FoldModel model;
  model.held_out_user = held_out_user;
  model.thresholds = thresholds_for(data, held_out_user);
  model.strategy = spec.strategy;
  const FoldRows rows = split_rows(data, held_out_user, model.thresholds);
  model.train_windows = rows.train.size();
  if (rows.train.empty()) throw Error(ErrorKind::InsufficientUsers, "fold " + held_out_user + " has no training windows");

  GridSearchOptions grid = options.grid;
  grid.seed = fold_seed(options.seed, held_out_user);

  if (spec.strategy == FusionStrategy::DpSelect) {
    if (options.strict_leakage) {
      for (std::size_t r : rows.train) {
        if (data.windows[r].user_id == held_out_user) {
          throw Error(ErrorKind::ProtocolViolation, "held-out user " + held_out_user + " present in the feature selection input");
        }
      }
    }
    const Matrix X = features.concatenated(spec.categories, rows.train);
    const DpStats st = dp_select(X, rows.train_labels, spec.dp_fraction);
    model.dp_selected = st.selected;
    const Matrix Xs = select_columns(X, st.selected);
    GridSearchResult g = grid_search_c(Xs, rows.train_labels, rows.train_users, grid);
    std::vector<double> raw(Xs.rows());
    for (std::size_t r = 0; r < Xs.rows(); ++r) raw[r] = g.model.score(Xs.row(r));
    model.dp_normalizer = ScoreNormalizer::fit(raw);
    model.dp_svm = std::move(g.model);
  } else {
    for (Category c : spec.categories) {
      const Matrix X = category_rows(features, c, rows.train);
      GridSearchResult g = grid_search_c(X, rows.train_labels, rows.train_users, grid);
      std::vector<double> raw(X.rows());
      for (std::size_t r = 0; r < X.rows(); ++r) raw[r] = g.model.score(X.row(r));
      CategoryModel cm{c, std::move(g.model), ScoreNormalizer::fit(raw), std::move(g.validation_accuracy)};
      model.categories.push_back(std::move(cm));
    }
    if (spec.strategy == FusionStrategy::NeuralNet) {
      FoldModel partial = model;
      partial.strategy = FusionStrategy::Sum;
      const Scored s = apply(partial, features, spec, rows.train);
      MlpHyper hyper = options.mlp;
      hyper.seed = fold_seed(options.mlp.seed ^ options.seed, held_out_user);
      model.mlp = train_mlp(s.per_category, rows.train_labels, hyper);
    }
  }
  const Scored train_scores = apply(model, features, spec, rows.train);
  model.heldout_threshold = max_accuracy_threshold(train_scores.fused, rows.train_labels).threshold;
  return model;
}

FoldResult score_fold(const WindowDataset& data, const FeatureTable& features, const FoldModel& model,
                      const LoocvOptions& options) {
  const FoldRows rows = split_rows(data, model.held_out_user, model.thresholds);
  FoldResult res;
  res.held_out_user = model.held_out_user;
  res.thresholds = model.thresholds;
  res.train_windows = model.train_windows;
  res.labels = rows.test_labels;
  for (std::size_t r : rows.test) res.start_seconds.push_back(data.windows[r].start_second);
  const Scored s = apply(model, features, options.fusion, rows.test);
  res.scores = s.fused;
  if (!s.per_category.empty()) {
    res.category_scores.resize(s.per_category.cols());
    for (std::size_t k = 0; k < s.per_category.cols(); ++k) {
      for (std::size_t r = 0; r < s.per_category.rows(); ++r) res.category_scores[k].push_back(s.per_category(r, k));
    }
  }
  res.heldout_threshold = model.heldout_threshold;
  res.heldout_accuracy = accuracy_at(res.scores, res.labels, model.heldout_threshold);
  const bool has_high = std::count(res.labels.begin(), res.labels.end(), Label::High) > 0;
  const bool has_low = std::count(res.labels.begin(), res.labels.end(), Label::Low) > 0;
  if (has_high && has_low) {
    const auto t = max_accuracy_threshold(res.scores, res.labels);
    res.oracle_threshold = t.threshold;
    res.oracle_accuracy = t.accuracy;
    res.auc = roc(res.scores, res.labels).auc;
  } else {
    res.oracle_threshold = has_high ? -INFINITY : INFINITY;
    res.oracle_accuracy = 1.0;
  }
  if (model.dp_svm) {
    res.chosen_c.push_back(model.dp_svm->C);
    res.dp_selected = model.dp_selected;
  }
  for (const auto& cm : model.categories) res.chosen_c.push_back(cm.svm.C);
  return res;
}

EvalReport loocv(const WindowDataset& data, const LoocvOptions& options, const std::map<std::string, FoldModel>& models,
                 std::vector<FoldModel>* trained) {
  options.fusion.validate();
  if (options.strict_leakage && data.thresholds_include_held_out) {
    throw Error(ErrorKind::ProtocolViolation, "strict leakage mode forbids thresholds pooled over every user");
  }
  const auto users = data.users();
  if (users.size() < 2) throw Error(ErrorKind::InsufficientUsers, "leave-one-user-out needs at least 2 users, got " + std::to_string(users.size()));
  for (const auto& w : data.windows) {
    for (Category c : options.fusion.categories) {
      if (!w.has(c)) throw Error(ErrorKind::MissingCategory, "window dump lacks category " + std::string(name(c)));
    }
  }

  EvalReport report;
  report.seed = options.seed;
  report.window_length = data.window_length;
  report.windows_total = data.windows.size();
  report.window_stats = data.stats;
  for (const auto& w : data.windows) (w.label == Label::High ? report.windows_high : report.windows_low) += 1;

  const FeatureTable features = FeatureTable::build(data, options.fusion.feature_mode, options.fusion.categories);

  // Folds with no labeled held-out windows are skipped.
  std::vector<std::string> fold_users;
  for (const auto& u : users) {
    const auto labels = fold_labels(data, thresholds_for(data, u));
    bool any = false;
    for (std::size_t i = 0; i < data.windows.size() && !any; ++i) any = data.windows[i].user_id == u && labels[i].has_value();
    if (any) {
      fold_users.push_back(u);
    } else {
      report.skipped.emplace_back(u, "no labeled windows");
    }
  }

  std::vector<FoldResult> results(fold_users.size());
  std::vector<FoldModel> fold_models(fold_users.size());
  std::vector<std::exception_ptr> errors(fold_users.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= fold_users.size()) return;
      try {
        auto it = models.find(fold_users[k]);
        fold_models[k] = it != models.end() ? it->second : train_fold(data, features, fold_users[k], options);
        results[k] = score_fold(data, features, fold_models[k], options);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(fold_users.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (trained) *trained = fold_models;

  std::vector<double> pooled_scores;
  std::vector<Label> pooled_labels;
  std::size_t heldout_correct = 0;
  double user_oracle = 0.0, user_heldout = 0.0;
  for (const auto& f : results) {
    pooled_scores.insert(pooled_scores.end(), f.scores.begin(), f.scores.end());
    pooled_labels.insert(pooled_labels.end(), f.labels.begin(), f.labels.end());
    heldout_correct += static_cast<std::size_t>(std::lround(f.heldout_accuracy * static_cast<double>(f.scores.size())));
    user_oracle += f.oracle_accuracy;
    user_heldout += f.heldout_accuracy;
  }
  report.pooled_windows = pooled_scores.size();
  if (!results.empty()) {
    report.mean_user_oracle_accuracy = user_oracle / static_cast<double>(results.size());
    report.mean_user_heldout_accuracy = user_heldout / static_cast<double>(results.size());
  }
  if (!pooled_scores.empty()) {
    report.pooled_heldout_accuracy = static_cast<double>(heldout_correct) / static_cast<double>(pooled_scores.size());
    const auto t = max_accuracy_threshold(pooled_scores, pooled_labels);
    report.pooled_oracle_threshold = t.threshold;
    report.pooled_oracle_accuracy = t.accuracy;
    report.pooled_roc = roc(pooled_scores, pooled_labels);
  }
  if (options.fusion.strategy != FusionStrategy::DpSelect) {
    for (std::size_t k = 0; k < options.fusion.categories.size(); ++k) {
      std::vector<double> s;
      for (const auto& f : results) s.insert(s.end(), f.category_scores[k].begin(), f.category_scores[k].end());
      if (s.empty()) continue;
      UnimodalSummary u{options.fusion.categories[k], max_accuracy_threshold(s, pooled_labels).accuracy, roc(s, pooled_labels).auc};
      report.unimodal.push_back(u);
    }
  }
  report.folds = std::move(results);
  return report;
}

}  // namespace attnfuse
