// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnfuse/eval.hpp"
#include "attnfuse/fuse.hpp"
#include "attnfuse/globalfeat.hpp"
#include "attnfuse/mlp.hpp"
#include "attnfuse/pipeline.hpp"
#include "attnfuse/svm.hpp"
#include "attnfuse/synth.hpp"
#include "attnfuse/window.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace attnfuse;

namespace {

// Tolerances and sizes.
constexpr double kGlobalAbsTol = 1e-9;
constexpr double kGlobalSeconds = 10.0;
constexpr double kSvmRelTol = 1e-3;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kFractionTol = 0.02;
constexpr double kFusionGain = 0.02;
constexpr std::size_t kFusionMinWindows = 5000;
constexpr double kXorNnMin = 0.90;
constexpr double kXorSumMax = 0.78;
constexpr std::size_t kDpMinHits = 27;
constexpr double kAucTol = 0.02;
constexpr double kBayesTol = 0.03;
constexpr double kE2eSeconds = 300.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::ostringstream line;
  line << (o.pass ? "PASS" : "FAIL") << "  " << name << "  " << o.detail << "  [" << std::fixed;
  line.precision(1);
  line << dt << " s]";
  std::cout << line.str() << std::endl;
}

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Label> to_labels(const std::vector<int>& high) {
  std::vector<Label> y;
  for (int h : high) y.push_back(h ? Label::High : Label::Low);
  return y;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ATTNFUSE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

WindowDataset synth_windows(const SynthSpec& spec, std::uint64_t seed, SynthDataset* out = nullptr) {
  SynthDataset d = generate(spec, seed);
  WindowDataset w = build_window_dataset(RawDataset{d.features, d.attention}, spec.labeling, false);
  if (out) *out = std::move(d);
  return w;
}

// ---------------------------------------------------------------------------

Outcome global_feature_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int w : {30, 60, 120}) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(static_cast<std::size_t>(w));
      double level = 0.0;
      const int kind = trial % 4;
      for (int i = 0; i < w; ++i) {
        level += z(rng);
        switch (kind) {
          case 0: x[i] = z(rng); break;
          case 1: x[i] = level; break;
          case 2: x[i] = std::round(2.0 * z(rng)); break;
          default: x[i] = std::sin(0.3 * i) + 0.1 * z(rng); break;
        }
      }
      const auto got = global_features(x);
      const auto want = oracle::global_features(x);
      for (std::size_t k = 0; k < kGlobalFeatures; ++k) worst = std::max(worst, std::fabs(got[k] - want[k]));
    }
  }
  const double dt = seconds_since(t0);
  return {worst < kGlobalAbsTol && dt < kGlobalSeconds, "max abs diff " + sci(worst) + ", " + num(dt, 2) + " s"};
}

Outcome shape_law() {
  SynthSpec spec = default_synth_spec();
  spec.n_users = 3;
  spec.min_seconds = 300;
  spec.max_seconds = 360;
  spec.labeling.window_length = 30;
  const auto data = synth_windows(spec, 4);
  const std::vector<Category> all(kAllCategories.begin(), kAllCategories.end());
  const auto table = FeatureTable::build(data, FeatureMode::Global, all);
  std::vector<std::size_t> rows(data.windows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const Matrix X = table.concatenated(all, rows);
  std::vector<Label> y;
  for (const auto& w : data.windows) y.push_back(w.label);
  const auto st = dp_select(X, y, 0.10);
  return {X.cols() == 728 && st.selected.size() == 73,
          std::to_string(X.cols()) + " global features, " + std::to_string(st.selected.size()) + " selected"};
}

Outcome svm_correctness() {
  SvmOptions o;
  o.tol = 1e-9;
  o.max_updates = 10'000'000;
  double worst = 0.0;
  for (unsigned seed = 1; seed <= 50; ++seed) {
    const auto d = fixture::svm_instance(1000 + seed, 8, 2);
    o.C = std::pow(10.0, double(seed % 5) - 2.0);
    const auto want = oracle::svm_dual(d.X, d.signs(), o.C, 40000);
    const auto got = train_linear_svm(d.matrix(), to_labels(d.high), o);
    worst = std::max(worst, std::fabs(got.info.primal_objective - want.primal) / std::max(1e-12, std::fabs(want.primal)));
  }
  double min_acc = 1.0;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 0.3);
    fixture::Labeled d;
    for (int i = 0; i < 100; ++i) {
      const int h = i % 2;
      d.X.push_back({(h ? 2.0 : -2.0) + z(rng), z(rng) * 3.0});
      d.high.push_back(h);
    }
    o.C = 10.0;
    const auto r = train_linear_svm(d.matrix(), to_labels(d.high), o);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.X.size(); ++i) ok += (r.model.score(d.X[i]) >= 0.0) == (d.high[i] == 1);
    min_acc = std::min(min_acc, double(ok) / double(d.X.size()));
  }
  bool monotone = true;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const auto d = fixture::svm_instance(seed, 300, 12);
    SvmOptions m;
    m.C = 1.0;
    const auto tr = train_linear_svm(d.matrix(), to_labels(d.high), m).info.dual_trace;
    for (std::size_t k = 1; k < tr.size(); ++k) monotone &= tr[k] <= tr[k - 1] + 1e-12 * (1.0 + std::fabs(tr[k - 1]));
  }
  return {worst < kSvmRelTol && min_acc == 1.0 && monotone,
          "worst rel gap " + sci(worst) + ", separable accuracy " + num(min_acc, 3) + ", monotone " +
              (monotone ? "yes" : "no")};
}

double gradient_error(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix S(24, 7);
  std::vector<Label> y(24);
  for (std::size_t r = 0; r < 24; ++r) {
    for (double& v : S.row(r)) v = u(rng);
    y[r] = r % 2 ? Label::High : Label::Low;
  }
  MlpFusionModel m = init_mlp(seed);
  for (double& v : m.b1) v = 0.1 * (u(rng) - 0.5);
  for (double& v : m.b2) v = 0.1 * (u(rng) - 0.5);
  const auto g = mlp_gradient(m, S, y);
  auto p = m.parameters();
  double num_err = 0.0, den = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + kGradStep;
    m.set_parameters(p);
    const double up = mlp_loss(m, S, y);
    p[k] = keep - kGradStep;
    m.set_parameters(p);
    const double down = mlp_loss(m, S, y);
    p[k] = keep;
    const double fd = (up - down) / (2 * kGradStep);
    num_err = std::max(num_err, std::fabs(fd - g[k]));
    den = std::max(den, std::fabs(fd) + std::fabs(g[k]));
  }
  return num_err / std::max(den, 1e-12);
}

Outcome mlp_gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) worst = std::max(worst, gradient_error(seed));
  const std::size_t count = init_mlp(1).parameters().size();
  return {worst < kGradRelTol && count == 273 && MlpFusionModel::kParameterCount == 273,
          "max rel error " + sci(worst) + ", " + std::to_string(count) + " parameters"};
}

SecondFeatureSeries flat_series(std::size_t T) {
  FeatureTrack t;
  t.user_id = "u01";
  t.session_id = "s01";
  t.category = Category::H;
  for (std::size_t s = 0; s < T; ++s) {
    t.timestamps.push_back(double(s) + 0.25);
    t.values.push_back(1.0);
  }
  return per_second_average(t, T);
}

Outcome window_protocol() {
  bool counts = true;
  for (std::size_t T : {200u, 777u}) {
    const std::vector<SecondFeatureSeries> s{flat_series(T)};
    AttentionSeries a{"u01", std::vector<double>(T)};
    for (std::size_t t = 0; t < T; ++t) a.values[t] = double((t * 37) % 101);
    for (int W : {30, 60, 120}) {
      LabelingConfig cfg;
      cfg.window_length = W;
      counts &= extract_windows(s, a, cfg, compute_label_thresholds(a.values, cfg)).candidates == T - W + 1;
    }
  }
  const std::size_t T = 10000;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  AttentionSeries a{"u01", {}};
  for (std::size_t t = 0; t < T; ++t) a.values.push_back(u(rng));
  const std::vector<SecondFeatureSeries> s{flat_series(T)};
  double worst = 0.0;
  for (int W : {1, 30, 60, 120}) {
    LabelingConfig cfg;
    cfg.window_length = W;
    const auto th = compute_label_thresholds(a.values, cfg);
    const auto out = extract_windows(s, a, cfg, th);
    const double observed = double(out.windows.size()) / double(out.candidates);
    worst = std::max(worst, std::fabs(observed - oracle::labeled_fraction_mc(W, th.low, th.high, 100000, 5)));
  }
  return {counts && worst <= kFractionTol,
          std::string("candidate counts ") + (counts ? "exact" : "wrong") + ", worst fraction gap " + num(worst)};
}

Outcome fusion_gain_independent() {
  SynthSpec spec;
  spec.n_users = 14;
  spec.min_seconds = 2500;
  spec.max_seconds = 3500;
  spec.labeling.window_length = 30;
  for (auto& ch : spec.channels) ch.enabled = false;
  for (Category c : {Category::EB, Category::HP}) {
    auto& ch = spec.channels[index_of(c)];
    ch.enabled = true;
    ch.gain = 1.0;
    ch.second_noise = 1.0;
    ch.rho = 0.3;
    ch.frame_noise = 0.5;
    ch.target_bayes = 0.70;
  }
  auto& eb = spec.channels[index_of(Category::EB)];
  eb.base = 0.5;
  eb.gain = -1.0;
  eb.second_noise = 0.05;
  eb.frame_noise = 0.05;
  bool all = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = synth_windows(spec, seed);
    LoocvOptions o;
    o.fusion.strategy = FusionStrategy::Sum;
    o.fusion.categories = {Category::EB, Category::HP};
    o.seed = seed;
    const auto r = loocv(data, o);
    double best = 0.0;
    for (const auto& u : r.unimodal) best = std::max(best, u.oracle_accuracy);
    const bool ok = r.pooled_windows >= kFusionMinWindows && r.pooled_oracle_accuracy >= best + kFusionGain;
    all &= ok;
    detail += (seed > 1 ? "; " : "") + std::string("n=") + std::to_string(r.pooled_windows) + " sum " +
              num(r.pooled_oracle_accuracy, 3) + " vs " + num(best, 3);
  }
  return {all, detail};
}

Outcome fusion_xor() {
  const auto train = fixture::xor_scores(31, 2000), test = fixture::xor_scores(32, 2000);
  const auto ytr = to_labels(train.high), yte = to_labels(test.high);
  MlpHyper h;
  h.learning_rate = 1.0;
  h.epochs = 5000;
  h.seed = 3;
  const auto model = train_mlp(train.matrix(), ytr, h);
  std::vector<double> s_tr, s_te, sum_te;
  for (const auto& x : train.X) s_tr.push_back(nn_fuse(model, x));
  for (const auto& x : test.X) {
    s_te.push_back(nn_fuse(model, x));
    double m = 0.0;
    for (double v : x) m += v;
    sum_te.push_back(m / double(x.size()));
  }
  const double nn = accuracy_at(s_te, yte, max_accuracy_threshold(s_tr, ytr).threshold);
  const double sum = max_accuracy_threshold(sum_te, yte).accuracy;
  return {nn >= kXorNnMin && sum <= kXorSumMax,
          "nn held-out " + num(nn, 3) + ", score sum at its best threshold " + num(sum, 3)};
}

Outcome dp_power() {
  std::size_t worst = 28;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    std::vector<std::size_t> informative;
    const auto d = fixture::dp_planted(seed, 2000, 0.5, &informative);
    const auto st = dp_select(d.matrix(), to_labels(d.high), 0.10);
    std::size_t hit = 0;
    for (std::size_t k : informative) hit += std::binary_search(st.selected.begin(), st.selected.end(), k);
    worst = std::min(worst, hit);
  }
  return {worst >= kDpMinHits, "fewest recovered " + std::to_string(worst) + "/28"};
}

Outcome evaluation_oracles() {
  std::mt19937_64 rng(77);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<int> high(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = double(rng() % 15);  // ties on purpose
      high[i] = int(rng() % 2);
    }
    high[0] = 1;
    high[1] = 0;
    const auto got = max_accuracy_threshold(s, to_labels(high));
    const auto want = oracle::max_accuracy(s, high);
    const bool same_threshold = got.threshold == want.threshold ||
                                std::fabs(got.threshold - want.threshold) <= 1e-12 * std::fabs(want.threshold);
    mismatches += !(got.accuracy == want.accuracy && same_threshold);
  }
  const std::size_t n = 20000;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> sep, ind, anti;
  std::vector<Label> y;
  for (std::size_t i = 0; i < n; ++i) {
    const bool h = i % 2;
    y.push_back(h ? Label::High : Label::Low);
    sep.push_back(h ? 1.0 + u(rng) : u(rng));
    anti.push_back(h ? u(rng) : 1.0 + u(rng));
    ind.push_back(u(rng));
  }
  const double a1 = roc(sep, y).auc, a2 = roc(ind, y).auc, a3 = roc(anti, y).auc;
  return {mismatches == 0 && a1 == 1.0 && std::fabs(a2 - 0.5) <= kAucTol && a3 == 0.0,
          std::to_string(mismatches) + " threshold mismatches, AUC " + num(a1, 3) + " / " + num(a2, 3) + " / " + num(a3, 3)};
}

Outcome determinism(const fs::path& root) {
  const fs::path data = root / "det_data";
  if (run_cli("synth --out " + data.string() + " --users 5 --min-seconds 240 --max-seconds 300 --window 30 --seed 9") != 0)
    return {false, "synth failed"};
  std::string detail;
  bool ok = true;
  for (const char* strategy : {"sum", "nn"}) {
    const std::string base = "evaluate --input " + data.string() + " --window 30 --fusion " + strategy + " --seed 4";
    std::string reports[3];
    const char* threads[3] = {"1", "1", "3"};
    for (int k = 0; k < 3; ++k) {
      const fs::path out = root / ("det_" + std::string(strategy) + std::to_string(k));
      if (run_cli(base + " --threads " + threads[k] + " --output " + out.string()) != 0) return {false, "evaluate failed"};
      reports[k] = slurp(out / "report.json");
    }
    const bool same = !reports[0].empty() && reports[0] == reports[1] && reports[0] == reports[2];
    ok &= same;
    detail += std::string(detail.empty() ? "" : ", ") + strategy + (same ? " identical" : " differs");
  }
  return {ok, detail + " (repeat and --threads 3)"};
}

Outcome end_to_end(const fs::path& root) {
  const fs::path data = root / "e2e_data", out = root / "e2e_out";
  if (run_cli("synth --out " + data.string() +
              " --users 60 --min-seconds 900 --max-seconds 1800 --window 60 --target-bayes 0.7 --seed 3") != 0)
    return {false, "synth failed"};
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_cli("evaluate --input " + data.string() + " --output " + out.string() + " --window 60");
  const double dt = seconds_since(t0);
  if (code != 0) return {false, "evaluate exited with " + std::to_string(code)};
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  const auto& p = j.at("pooled");
  const bool modes = p.contains("oracle_accuracy") && p.contains("heldout_accuracy");
  // Users without any labeled window are skipped by the protocol and listed.
  const std::size_t folds = j.at("folds").size(), skipped = j.at("skipped").size();
  return {modes && folds > 0 && folds + skipped == 60 && dt < kE2eSeconds,
          std::to_string(folds) + " folds + " + std::to_string(skipped) + " skipped, oracle " + num(p.value("oracle_accuracy", 0.0), 3) + ", held-out " +
              num(p.value("heldout_accuracy", 0.0), 3) + ", evaluate " + num(dt, 1) + " s"};
}

Outcome bayes_calibration() {
  SynthSpec spec;
  spec.n_users = 10;
  spec.min_seconds = 900;
  spec.max_seconds = 1800;
  spec.labeling.window_length = 30;
  for (auto& ch : spec.channels) ch.enabled = false;
  auto& ch = spec.channels[index_of(Category::HP)];
  ch.enabled = true;
  ch.gain = 1.0;
  ch.second_noise = 1.0;
  ch.rho = 0.3;
  ch.frame_noise = 0.5;
  ch.target_bayes = 0.80;
  SynthDataset synth;
  const auto data = synth_windows(spec, 11, &synth);
  LoocvOptions o;
  o.fusion.strategy = FusionStrategy::None;
  o.fusion.categories = {Category::HP};
  o.seed = 11;
  const auto r = loocv(data, o);
  const double bayes = synth.bayes_accuracy[index_of(Category::HP)].value_or(0.0);
  return {std::fabs(bayes - 0.80) <= 0.005 && std::fabs(r.pooled_oracle_accuracy - 0.80) <= kBayesTol,
          "generator Bayes " + num(bayes, 3) + ", pooled oracle accuracy " + num(r.pooled_oracle_accuracy, 3)};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "attnfuse_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  report("global features vs naive reference", global_feature_oracle);
  report("global dimension 728, dp selection 73", shape_law);
  report("svm objective, separability, monotone dual", svm_correctness);
  report("mlp gradient check and parameter count", mlp_gradient_check);
  report("window candidates and labeled fraction", window_protocol);
  report("score-sum gain on independent channels", fusion_gain_independent);
  report("nn fusion on xor scores", fusion_xor);
  report("dp recovers planted features", dp_power);
  report("threshold sweep and auc oracles", evaluation_oracles);
  report("deterministic reports", [&] { return determinism(root); });
  report("60-user evaluate run", [&] { return end_to_end(root); });
  report("10-user pooled accuracy near Bayes 0.80", bayes_calibration);

  fs::remove_all(root);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
