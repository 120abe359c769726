#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "attnfuse/error.hpp"
#include "attnfuse/eval.hpp"
#include "attnfuse/pipeline.hpp"
#include "attnfuse/synth.hpp"

using namespace attnfuse;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n_users = 4;
  s.min_seconds = 300;
  s.max_seconds = 400;
  s.labeling.window_length = 30;
  for (auto& ch : s.channels) ch.enabled = false;
  return s;
}

double pooled_accuracy(const SynthSpec& spec, std::uint64_t seed, Category c) {
  const auto synth = generate(spec, seed);
  const auto data = build_window_dataset(RawDataset{synth.features, synth.attention}, spec.labeling, false);
  LoocvOptions o;
  o.fusion.strategy = FusionStrategy::None;
  o.fusion.categories = {c};
  o.seed = seed;
  return loocv(data, o).pooled_oracle_accuracy;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  auto spec = default_synth_spec();
  spec.n_users = 3;
  spec.min_seconds = 120;
  spec.max_seconds = 180;
  const auto a = generate(spec, 5), b = generate(spec, 5), c = generate(spec, 6);
  REQUIRE(a.features.tracks.size() == b.features.tracks.size());
  for (std::size_t k = 0; k < a.features.tracks.size(); ++k) {
    CHECK(a.features.tracks[k].values == b.features.tracks[k].values);
    CHECK(a.features.tracks[k].timestamps == b.features.tracks[k].timestamps);
  }
  for (std::size_t u = 0; u < a.attention.size(); ++u) CHECK(a.attention[u].values == b.attention[u].values);
  CHECK(a.attention[0].values != c.attention[0].values);
  CHECK(a.features.tracks.size() == 3 * kNumCategories);
  for (const auto& att : a.attention) {
    CHECK(att.values.size() >= 120);
    CHECK(att.values.size() <= 180);
    for (double v : att.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }
  }
  for (const auto& t : a.features.tracks) {
    if (t.category != Category::EB) continue;
    for (double v : t.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("noiseless channel is perfectly separable") {
  auto spec = small_spec();
  auto& ch = spec.channels[index_of(Category::H)];
  ch = {};
  ch.gain = 1.0;
  ch.second_noise = 0.0;
  ch.frame_noise = 0.0;
  CHECK(pooled_accuracy(spec, 1, Category::H) == 1.0);
}

TEST_CASE("attention-independent channel carries no information") {
  auto spec = small_spec();
  spec.n_users = 6;
  spec.min_seconds = 900;
  spec.max_seconds = 1200;
  auto& ch = spec.channels[index_of(Category::EB)];
  ch = {};
  ch.base = 0.5;
  ch.gain = 0.0;
  ch.second_noise = 0.05;
  ch.frame_noise = 0.05;
  // Overlapping windows make window-level accuracy too noisy here, so check frames directly.
  const auto d = generate(spec, 2);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
  for (const auto& t : d.features.tracks) {
    if (t.category != Category::EB) continue;
    const auto att = std::find_if(d.attention.begin(), d.attention.end(),
                                  [&](const AttentionSeries& a) { return a.user_id == t.user_id; });
    REQUIRE(att != d.attention.end());
    for (std::size_t i = 0; i < t.frames(); ++i) {
      const auto sec = static_cast<std::size_t>(t.timestamps[i]);
      if (sec >= att->values.size()) continue;
      const double x = t.values[i], y = att->values[sec];
      sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y, n += 1;
    }
  }
  REQUIRE(n > 5000);
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  CHECK(std::fabs(r) < 0.05);
}

TEST_CASE("calibrated gain reaches the target Bayes accuracy") {
  auto spec = small_spec();
  spec.n_users = 5;
  auto& ch = spec.channels[index_of(Category::HP)];
  ch = {};
  ch.gain = 1.0;
  ch.second_noise = 1.0;
  ch.rho = 0.5;
  ch.frame_noise = 0.5;
  ch.target_bayes = 0.75;
  const auto d = generate(spec, 3);
  REQUIRE(d.bayes_accuracy[index_of(Category::HP)].has_value());
  CHECK(*d.bayes_accuracy[index_of(Category::HP)] == doctest::Approx(0.75).epsilon(0.01));
  CHECK(d.effective_gain[index_of(Category::HP)] > 0.0);
  CHECK(d.labeled_windows > 0);
}

TEST_CASE("AR(1) mean variance") {
  CHECK(ar1_mean_variance(0.0, 10) == doctest::Approx(0.1));
  CHECK(ar1_mean_variance(0.5, 1) == doctest::Approx(1.0));
  // Direct double sum over the correlation matrix.
  for (double rho : {-0.3, 0.2, 0.9}) {
    const int w = 25;
    double s = 0.0;
    for (int i = 0; i < w; ++i) {
      for (int j = 0; j < w; ++j) s += std::pow(rho, std::abs(i - j));
    }
    CHECK(ar1_mean_variance(rho, w) == doctest::Approx(s / (w * w)).epsilon(1e-12));
  }
}

TEST_CASE("spec validation") {
  auto bad = [](auto mutate) {
    SynthSpec s = default_synth_spec();
    mutate(s);
    try {
      s.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::InvalidSpec;
    }
    return false;
  };
  CHECK_NOTHROW(default_synth_spec().validate());
  CHECK(bad([](SynthSpec& s) { s.n_users = 0; }));
  CHECK(bad([](SynthSpec& s) { s.max_seconds = s.min_seconds - 1; }));
  CHECK(bad([](SynthSpec& s) { s.frame_rate = 0; }));
  CHECK(bad([](SynthSpec& s) { s.missing_second_rate = 1.0; }));
  CHECK(bad([](SynthSpec& s) { s.channels[0].rho = 1.0; }));
  CHECK(bad([](SynthSpec& s) { s.channels[0].second_noise = -1.0; }));
  CHECK(bad([](SynthSpec& s) { s.channels[0].target_bayes = 0.5; }));
  CHECK(bad([](SynthSpec& s) {
    for (auto& c : s.channels) c.enabled = false;
  }));
}

TEST_CASE("written dataset loads back") {
  auto spec = default_synth_spec();
  spec.n_users = 2;
  spec.min_seconds = 100;
  spec.max_seconds = 120;
  spec.labeling.window_length = 30;
  const auto d = generate(spec, 4);
  const auto dir = std::filesystem::temp_directory_path() / "attnfuse_synth_test";
  std::filesystem::remove_all(dir);
  write_dataset(dir, spec, 4, d);
  const auto raw = load_dataset(dir);
  REQUIRE(raw.attention.size() == 2);
  CHECK(raw.attention[0].values == d.attention[0].values);
  REQUIRE(raw.features.tracks.size() == d.features.tracks.size());
  for (std::size_t k = 0; k < d.features.tracks.size(); ++k) CHECK(raw.features.tracks[k].values == d.features.tracks[k].values);
  std::ifstream in(dir / "ground_truth.json");
  const auto truth = nlohmann::json::parse(in);
  CHECK(truth.at("seed").get<int>() == 4);
  CHECK(truth.at("n_users").get<int>() == 2);
  std::filesystem::remove_all(dir);
}
