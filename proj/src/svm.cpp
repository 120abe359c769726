#include "attnfuse/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "attnfuse/error.hpp"
#include "attnfuse/kernels.hpp"

namespace attnfuse {
namespace {

inline double sign_of(Label l) { return l == Label::High ? 1.0 : -1.0; }

void check_inputs(const Matrix& X, std::span<const Label> y) {
  if (X.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "sample and label counts differ");
  bool has_low = false, has_high = false;
  for (Label l : y) (l == Label::High ? has_high : has_low) = true;
  if (!has_low || !has_high) throw Error(ErrorKind::SingleClassInput, "SVM training needs both Low and High samples");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteFeature, "non-finite feature value in SVM input");
  }
}

// Bias minimizing the hinge sum for fixed margins s_i = w . z_i; among the
// minimizers the one closest to `hint` is returned.
double best_bias(std::span<const double> s, std::span<const Label> y, double hint) {
  // slope(b) = -#{y=+1, b < y_i - s_i} + #{y=-1, b > y_i - s_i}
  struct Bp {
    double at;
    bool positive;
  };
  std::vector<Bp> bps(s.size());
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double yi = sign_of(y[i]);
    bps[i] = {yi - s[i], y[i] == Label::High};
    n_pos += y[i] == Label::High;
  }
  std::sort(bps.begin(), bps.end(), [](const Bp& a, const Bp& b) { return a.at < b.at; });
  // Left of every breakpoint the slope is -n_pos. Each breakpoint raises it by 1.
  long slope = -static_cast<long>(n_pos);
  double lo = -INFINITY, hi = INFINITY;
  bool found_lo = false;
  for (std::size_t k = 0; k < bps.size(); ++k) {
    const long before = slope;
    slope += 1;
    if (!found_lo && before < 0 && slope >= 0) {
      lo = bps[k].at;
      found_lo = true;
      if (slope > 0) {
        hi = lo;
        break;
      }
      continue;
    }
    if (found_lo && slope > 0) {
      hi = bps[k].at;
      break;
    }
  }
  if (!found_lo) return hint;
  return std::clamp(hint, lo, hi);
}

struct Sample {
  double key;
  std::size_t index;
};

// Sorts a prefix of v on demand, in chunks of doubling size.
class LazySorted {
 public:
  explicit LazySorted(std::vector<Sample>& v) : v_(v) {}
  template <class Cmp>
  void ensure(std::size_t i, Cmp cmp) {
    while (i >= sorted_ && sorted_ < v_.size()) {
      const std::size_t end = std::min(v_.size(), sorted_ + std::max<std::size_t>(32, sorted_));
      const auto first = v_.begin() + static_cast<long>(sorted_);
      const auto last = v_.begin() + static_cast<long>(end);
      if (last != v_.end()) std::nth_element(first, last, v_.end(), cmp);
      std::sort(first, last, cmp);
      sorted_ = end;
    }
  }

 private:
  std::vector<Sample>& v_;
  std::size_t sorted_ = 0;
};

}  // namespace

double LinearSvmModel::score_standardized(std::span<const double> z) const { return kernels::dot(w, z) + b; }

void LinearSvmModel::finalize() {
  raw_w.resize(w.size());
  raw_b = b;
  for (std::size_t k = 0; k < w.size(); ++k) {
    raw_w[k] = w[k] / feature_stds[k];
    raw_b -= raw_w[k] * feature_means[k];
  }
}

double LinearSvmModel::score(std::span<const double> x) const {
  if (x.size() != w.size()) throw Error(ErrorKind::DimensionMismatch, "SVM input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(w.size()));
  if (raw_w.size() != w.size()) throw Error(ErrorKind::InvalidSpec, "SVM model used before finalize()");
  return kernels::dot(raw_w, x) + raw_b;
}

double svm_primal_objective(const Matrix& Z, std::span<const Label> y, std::span<const double> w, double b, double C) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < Z.rows(); ++i) {
    hinge += std::max(0.0, 1.0 - sign_of(y[i]) * (kernels::dot(w, Z.row(i)) + b));
  }
  return 0.5 * kernels::dot(w, w) + C * hinge;
}

namespace {

// Standardized copy of some rows of X with the per-row squared norms.
struct Prepared {
  Matrix Z;
  std::vector<Label> y;
  std::vector<double> means, stds, sq;
};

Prepared prepare(const Matrix& X, std::span<const Label> y, std::span<const std::size_t> rows) {
  const std::size_t n = rows.size();
  const std::size_t d = X.cols();
  Prepared P;
  P.means.assign(d, 0.0);
  P.stds.assign(d, 0.0);
  for (std::size_t r : rows) kernels::axpy(1.0, X.row(r), P.means);
  for (double& m : P.means) m /= static_cast<double>(n);
  for (std::size_t r : rows) kernels::add_squared_diff(P.stds, X.row(r), P.means);
  std::vector<double> inv_scale(d);
  for (std::size_t k = 0; k < d; ++k) {
    double sd = std::sqrt(P.stds[k] / static_cast<double>(n));
    if (!(sd > 1e-12 * (1.0 + std::abs(P.means[k])))) sd = 1.0;
    P.stds[k] = sd;
    inv_scale[k] = 1.0 / sd;
  }
  P.Z = Matrix(n, d);
  P.y.resize(n);
  P.sq.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto z = P.Z.row(i);
    std::copy(X.row(rows[i]).begin(), X.row(rows[i]).end(), z.begin());
    kernels::standardize(z, P.means, inv_scale);
    P.y[i] = y[rows[i]];
    P.sq[i] = kernels::dot(z, z);
  }
  return P;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

SvmTrainResult train_prepared(const Prepared& P, const SvmOptions& options, std::span<const double> warm_alpha) {
  if (!(options.C > 0.0)) throw Error(ErrorKind::InvalidConfig, "SVM C must be positive");
  const Matrix& Z = P.Z;
  const std::span<const Label> y = P.y;
  const std::vector<double>& sq = P.sq;
  const std::size_t n = Z.rows();
  const std::size_t d = Z.cols();
  const double C = options.C;

  SvmTrainResult result;
  LinearSvmModel& model = result.model;
  model.C = C;
  model.feature_means = P.means;
  model.feature_stds = P.stds;

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = sign_of(y[i]);

  std::vector<double> alpha(n, 0.0);
  if (!warm_alpha.empty()) {
    if (warm_alpha.size() != n) throw Error(ErrorKind::DimensionMismatch, "warm start has wrong length");
    for (std::size_t i = 0; i < n; ++i) alpha[i] = std::clamp(warm_alpha[i], 0.0, C);
  }
  model.w.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] != 0.0) kernels::axpy(alpha[i] * ys[i], Z.row(i), model.w);
  }

  auto dual_objective = [&] {
    return 0.5 * kernels::dot(model.w, model.w) - std::accumulate(alpha.begin(), alpha.end(), 0.0);
  };
  auto in_up = [&](std::size_t i) { return ys[i] > 0 ? alpha[i] < C : alpha[i] > 0.0; };
  auto in_low = [&](std::size_t i) { return ys[i] > 0 ? alpha[i] > 0.0 : alpha[i] < C; };

  std::vector<double> neg_err(n);  // -E_i = y_i - w . z_i
  std::vector<Sample> up, low;
  up.reserve(n);
  low.reserve(n);
  SvmTrainInfo& info = result.info;
  double m_up = 0.0, m_low = 0.0;

  // Samples at a bound whose gradient cannot form a violating pair are
  // shrunk away; optimality is always confirmed on the full set.
  std::vector<std::size_t> all(n), active;
  std::iota(all.begin(), all.end(), 0);
  active = all;
  std::vector<std::size_t> kept;
  kept.reserve(n);

  auto scan = [&](const std::vector<std::size_t>& set) {
    up.clear();
    low.clear();
    m_up = -INFINITY;
    info.scanned += set.size();
    m_low = INFINITY;
    for (std::size_t i : set) {
      neg_err[i] = ys[i] - kernels::dot(model.w, Z.row(i));
      if (in_up(i)) {
        up.push_back({neg_err[i], i});
        m_up = std::max(m_up, neg_err[i]);
      }
      if (in_low(i)) {
        low.push_back({neg_err[i], i});
        m_low = std::min(m_low, neg_err[i]);
      }
    }
    return (up.empty() || low.empty()) ? 0.0 : m_up - m_low;
  };

  while (true) {
    info.max_violation = scan(active);
    info.dual_trace.push_back(dual_objective());
    const bool full = active.size() == n;
    if (info.max_violation < options.tol) {
      if (full) {
        info.converged = true;
        break;
      }
      active = all;
      continue;
    }
    if (info.updates >= options.max_updates) {
      if (!full) info.max_violation = scan(all);
      break;
    }
    ++info.passes;

    auto by_up = [](const Sample& a, const Sample& b) { return a.key > b.key || (a.key == b.key && a.index < b.index); };
    auto by_low = [](const Sample& a, const Sample& b) { return a.key < b.key || (a.key == b.key && a.index < b.index); };
    kept.clear();
    for (std::size_t i : active) {
      const bool u = in_up(i), l = in_low(i);
      const bool idle = (u && !l && neg_err[i] < m_low) || (l && !u && neg_err[i] > m_up);
      if (!idle) kept.push_back(i);
    }
    auto shrunk = [&](const Sample& smp) {
      const bool u = in_up(smp.index), l = in_low(smp.index);
      return (u && !l && smp.key < m_low) || (l && !u && smp.key > m_up);
    };
    up.erase(std::remove_if(up.begin(), up.end(), shrunk), up.end());
    low.erase(std::remove_if(low.begin(), low.end(), shrunk), low.end());

    // Pair the most violating "up" samples with the most violating "low"
    // samples, ranked by the gradient at the start of the pass.
    // A pass usually ends after a few pairs, so the lists are sorted lazily.
    LazySorted lazy_up(up), lazy_low(low);
    std::size_t pu = 0, pl = 0;
    std::size_t pass_updates = 0;
    while (pu < up.size() && pl < low.size() && info.updates < options.max_updates) {
      lazy_up.ensure(pu, by_up);
      lazy_low.ensure(pl, by_low);
      const std::size_t p = up[pu].index;
      const std::size_t q = low[pl].index;
      if (up[pu].key - low[pl].key < options.tol) break;
      if (p == q || !in_up(p)) {
        ++pu;
        continue;
      }
      if (!in_low(q)) {
        ++pl;
        continue;
      }
      const kernels::Dot3 d3 = kernels::dot3(model.w, Z.row(p), Z.row(q));
      const double ep = d3.wa - ys[p];
      const double eq = d3.wb - ys[q];
      const double kappa = std::max(sq[p] + sq[q] - 2.0 * d3.ab, 1e-12);
      double t = (eq - ep) / kappa;
      // alpha_p += y_p t, alpha_q -= y_q t
      double t_lo = ys[p] > 0 ? -alpha[p] : alpha[p] - C;
      double t_hi = ys[p] > 0 ? C - alpha[p] : alpha[p];
      t_lo = std::max(t_lo, ys[q] > 0 ? alpha[q] - C : -alpha[q]);
      t_hi = std::min(t_hi, ys[q] > 0 ? alpha[q] : C - alpha[q]);
      t = std::clamp(t, t_lo, t_hi);
      if (t > 0.0) {
        alpha[p] = std::clamp(alpha[p] + ys[p] * t, 0.0, C);
        alpha[q] = std::clamp(alpha[q] - ys[q] * t, 0.0, C);
        kernels::axpy_diff(t, Z.row(p), Z.row(q), model.w);
        ++info.updates;
        ++pass_updates;
      }
      const bool p_done = !in_up(p);
      const bool q_done = !in_low(q);
      if (p_done || !q_done) ++pu;
      if (q_done || !p_done) ++pl;
    }
    if (pass_updates == 0) {
      if (full) break;
      active = all;
      continue;
    }
    active.swap(kept);
  }
  if (active.size() != n) scan(all);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = ys[i] - neg_err[i];
  const double hint = (std::isfinite(m_up) && std::isfinite(m_low)) ? 0.5 * (m_up + m_low) : 0.0;
  model.b = best_bias(s, y, hint);
  info.dual_objective = info.dual_trace.back();
  info.primal_objective = svm_primal_objective(Z, y, model.w, model.b, C);
  info.alpha = std::move(alpha);
  model.finalize();
  return result;
}

}  // namespace

SvmTrainResult train_linear_svm(const Matrix& X, std::span<const Label> y, const SvmOptions& options,
                                std::span<const double> warm_alpha) {
  check_inputs(X, y);
  if (!(options.C > 0.0)) throw Error(ErrorKind::InvalidConfig, "SVM C must be positive");
  return train_prepared(prepare(X, y, all_rows(X.rows())), options, warm_alpha);
}

std::vector<double> default_c_grid() {
  std::vector<double> g;
  for (int e = -8; e <= 2; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

namespace {

double sign_accuracy(const LinearSvmModel& m, const Matrix& X, std::span<const std::size_t> rows, std::span<const Label> y) {
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    const Label pred = m.score(X.row(r)) >= 0.0 ? Label::High : Label::Low;
    correct += pred == y[r];
  }
  return rows.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(rows.size());
}

bool both_classes(std::span<const std::size_t> rows, std::span<const Label> y) {
  bool lo = false, hi = false;
  for (std::size_t r : rows) (y[r] == Label::High ? hi : lo) = true;
  return lo && hi;
}

}  // namespace

GridSearchResult grid_search_c(const Matrix& X, std::span<const Label> y, std::span<const std::string> groups,
                               const GridSearchOptions& options) {
  check_inputs(X, y);
  if (options.grid.empty()) throw Error(ErrorKind::InvalidConfig, "empty C grid");
  if (groups.size() != X.rows()) throw Error(ErrorKind::DimensionMismatch, "group and sample counts differ");
  std::vector<double> grid = options.grid;
  std::sort(grid.begin(), grid.end());

  GridSearchResult result;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> fit_rows, val_rows;

  std::vector<std::string> distinct(groups.begin(), groups.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() >= 2) {
    std::vector<std::string> order = distinct;
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t k = static_cast<std::size_t>(std::lround(options.validation_fraction * static_cast<double>(order.size())));
    k = std::clamp<std::size_t>(k, 1, order.size() - 1);
    std::set<std::string, std::less<>> held(order.begin(), order.begin() + static_cast<long>(k));
    for (std::size_t i = 0; i < groups.size(); ++i) (held.count(groups[i]) ? val_rows : fit_rows).push_back(i);
    result.validation_groups.assign(held.begin(), held.end());
  }
  if (!both_classes(fit_rows, y) || val_rows.empty()) {
    result.grouped_split = false;
    result.validation_groups.clear();
    fit_rows.clear();
    val_rows.clear();
    for (Label cls : {Label::Low, Label::High}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == cls) members.push_back(i);
      }
      std::shuffle(members.begin(), members.end(), rng);
      std::size_t k = static_cast<std::size_t>(std::lround(options.validation_fraction * static_cast<double>(members.size())));
      if (members.size() >= 2) k = std::clamp<std::size_t>(k, 1, members.size() - 1);
      else k = 0;
      val_rows.insert(val_rows.end(), members.begin(), members.begin() + static_cast<long>(k));
      fit_rows.insert(fit_rows.end(), members.begin() + static_cast<long>(k), members.end());
    }
    std::sort(fit_rows.begin(), fit_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
  }

  if (val_rows.empty()) {
    // Too few samples for any split: score each C on the training data itself.
    fit_rows.resize(y.size());
    std::iota(fit_rows.begin(), fit_rows.end(), 0);
    val_rows = fit_rows;
  }

  const Prepared fit = prepare(X, y, fit_rows);

  std::vector<double> warm;
  double prev_c = 0.0;
  double best_acc = -1.0;
  for (double c : grid) {
    SvmOptions opt = options.svm;
    opt.C = c;
    if (!warm.empty()) {
      for (double& a : warm) a *= c / prev_c;
    }
    SvmTrainResult r = train_prepared(fit, opt, warm);
    // A run stopped by the update cap is not a solution at this C, and larger
    // C values only get harder, so the sweep ends here.
    if (!r.info.converged && best_acc >= 0.0) break;
    warm = std::move(r.info.alpha);
    prev_c = c;
    const double acc = sign_accuracy(r.model, X, val_rows, y);
    result.validation_accuracy.push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      result.best_c = c;
    }
    if (!r.info.converged) break;
  }
  SvmOptions final_opt = options.svm;
  final_opt.C = result.best_c;
  result.model = train_linear_svm(X, y, final_opt).model;
  return result;
}

ScoreNormalizer ScoreNormalizer::fit(std::span<const double> train_scores) {
  if (train_scores.empty()) return {};
  const auto [lo, hi] = std::minmax_element(train_scores.begin(), train_scores.end());
  return {*lo, *hi};
}

double ScoreNormalizer::operator()(double raw) const {
  if (!(max > min)) return 0.5;
  return std::clamp((raw - min) / (max - min), 0.0, 1.0);
}

}  // namespace attnfuse
