#include "attnfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <tuple>
#include <cstdio>

#include <json.hpp>

#include "attnfuse/error.hpp"
#include "attnfuse/hash.hpp"

namespace attnfuse {
namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::string user_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%03d", k + 1);
  return buf;
}

void spec_error(const std::string& msg) { throw Error(ErrorKind::InvalidSpec, msg); }

double accuracy_for_gain(std::span<const double> band, std::span<const Label> labels, ChannelModel ch, double gain,
                         std::size_t dim, int w, int fr) {
  ch.gain = gain;
  return window_mean_bayes_accuracy(band, labels, ch, dim, w, fr);
}

}  // namespace

void SynthSpec::validate() const {
  if (n_users < 1) spec_error("n_users must be positive");
  if (min_seconds < 1 || max_seconds < min_seconds) spec_error("session length range is invalid");
  if (frame_rate < 1) spec_error("frame_rate must be positive");
  if (!(attention_step >= 0.0) || !(attention_reversion >= 0.0) || attention_reversion > 1.0) {
    spec_error("attention walk parameters are invalid");
  }
  if (!(missing_second_rate >= 0.0) || missing_second_rate >= 1.0) spec_error("missing_second_rate must lie in [0,1)");
  try {
    labeling.validate();
  } catch (const Error& e) {
    spec_error(e.what());
  }
  bool any = false;
  for (Category c : kAllCategories) {
    const ChannelModel& ch = channels[index_of(c)];
    if (!ch.enabled) continue;
    any = true;
    const std::string n(name(c));
    if (!std::isfinite(ch.base) || !std::isfinite(ch.gain)) spec_error(n + ": base and gain must be finite");
    if (!(ch.second_noise >= 0.0) || !(ch.frame_noise >= 0.0) || !(ch.user_offset >= 0.0)) {
      spec_error(n + ": noise levels must be non-negative");
    }
    if (!(ch.rho > -1.0 && ch.rho < 1.0)) spec_error(n + ": rho must lie in (-1,1)");
    if (!std::isfinite(ch.volatility)) spec_error(n + ": volatility must be finite");
    if (ch.target_bayes && !(*ch.target_bayes > 0.5 && *ch.target_bayes < 1.0)) {
      spec_error(n + ": target_bayes must lie in (0.5,1)");
    }
  }
  if (!any) spec_error("no category enabled");
}

SynthSpec default_synth_spec() {
  SynthSpec s;
  for (Category c : kAllCategories) {
    ChannelModel& ch = s.channels[index_of(c)];
    ch.gain = 1.0;
    ch.second_noise = 2.0;
    ch.rho = 0.3;
    ch.frame_noise = 1.0;
  }
  ChannelModel& eb = s.channels[index_of(Category::EB)];
  eb.base = 0.5;
  eb.gain = -0.02;
  eb.second_noise = 0.05;
  eb.frame_noise = 0.05;
  s.channels[index_of(Category::EAR)].base = 0.3;
  return s;
}

double ar1_mean_variance(double rho, int w) {
  if (w < 1) return 0.0;
  double acc = 1.0;
  double r = 1.0;
  for (int k = 1; k < w; ++k) {
    r *= rho;
    acc += 2.0 * (1.0 - static_cast<double>(k) / w) * r;
  }
  return acc / w;
}

double window_mean_bayes_accuracy(std::span<const double> band, std::span<const Label> labels, const ChannelModel& ch,
                                  std::size_t dim, int window_length, int frame_rate) {
  if (band.empty()) return 0.0;
  const double n = static_cast<double>(band.size());
  const double var = ch.user_offset * ch.user_offset +
                     (ch.second_noise * ch.second_noise * ar1_mean_variance(ch.rho, window_length) +
                      ch.frame_noise * ch.frame_noise / (static_cast<double>(window_length) * frame_rate)) /
                         static_cast<double>(dim);
  const double sign = ch.gain < 0.0 ? -1.0 : 1.0;
  std::vector<double> m(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) m[i] = sign * ch.gain * (band[i] - 50.0) / 50.0;
  const double sd = std::sqrt(var);

  auto accuracy = [&](double c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const bool high = labels[i] == Label::High;
      if (sd == 0.0) {
        acc += high ? (m[i] >= c) : (m[i] < c);
      } else {
        const double z = (m[i] - c) / sd;
        acc += high ? normal_cdf(z) : normal_cdf(-z);
      }
    }
    return acc / n;
  };

  // Candidates: always-High, always-Low, every midpoint of the noiseless
  // statistic, then a dense grid refined by golden section when noisy.
  std::vector<double> sorted = m;
  std::sort(sorted.begin(), sorted.end());
  double best = std::max(accuracy(-INFINITY), accuracy(INFINITY));
  if (sd == 0.0) {
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      if (sorted[i] < sorted[i + 1]) best = std::max(best, accuracy(0.5 * (sorted[i] + sorted[i + 1])));
    }
    return best;
  }
  const double lo = sorted.front() - 4.0 * sd;
  const double hi = sorted.back() + 4.0 * sd;
  constexpr int kGrid = 400;
  const double step = (hi - lo) / kGrid;
  int best_k = 0;
  double best_grid = -1.0;
  for (int k = 0; k <= kGrid; ++k) {
    const double a = accuracy(lo + k * step);
    if (a > best_grid) {
      best_grid = a;
      best_k = k;
    }
  }
  double a = lo + (best_k - 1) * step;
  double b = lo + (best_k + 1) * step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = accuracy(x1), f2 = accuracy(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = accuracy(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = accuracy(x1);
    }
  }
  return std::max({best, best_grid, f1, f2});
}

SynthDataset generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  SynthDataset out;
  const int W = spec.labeling.window_length;

  // Attention walks first: the oracle and any gain calibration depend on them.
  std::vector<std::mt19937_64> rngs;
  for (int u = 0; u < spec.n_users; ++u) {
    const std::string id = user_name(u);
    std::mt19937_64 rng(derive_seed(seed, id));
    std::uniform_int_distribution<int> len(spec.min_seconds, spec.max_seconds);
    std::normal_distribution<double> z(0.0, 1.0);
    const int T = len(rng);
    AttentionSeries a{id, std::vector<double>(static_cast<std::size_t>(T))};
    double x = std::uniform_real_distribution<double>(20.0, 80.0)(rng);
    for (int t = 0; t < T; ++t) {
      a.values[t] = spec.integer_attention ? std::round(x) : x;
      x = std::clamp(x + spec.attention_reversion * (50.0 - x) + spec.attention_step * z(rng), 0.0, 100.0);
    }
    out.attention.push_back(std::move(a));
    rngs.push_back(rng);
  }

  std::vector<double> pool;
  for (const auto& a : out.attention) pool.insert(pool.end(), a.values.begin(), a.values.end());
  out.thresholds = compute_label_thresholds(pool, spec.labeling);

  std::vector<double> band;
  std::vector<Label> labels;
  for (const auto& a : out.attention) {
    if (a.values.size() < static_cast<std::size_t>(W)) continue;
    double sum = 0.0;
    for (int t = 0; t < W; ++t) sum += a.values[t];
    for (std::size_t s = 0;; ++s) {
      const double mean = sum / W;
      if (auto l = label_for(mean, out.thresholds)) {
        band.push_back(mean);
        labels.push_back(*l);
      }
      if (s + W >= a.values.size()) break;
      sum += a.values[s + W] - a.values[s];
    }
  }
  out.labeled_windows = band.size();

  std::array<ChannelModel, kNumCategories> channels = spec.channels;
  const bool both = std::count(labels.begin(), labels.end(), Label::High) > 0 && std::count(labels.begin(), labels.end(), Label::Low) > 0;
  for (Category c : kAllCategories) {
    ChannelModel& ch = channels[index_of(c)];
    if (!ch.enabled) continue;
    if (ch.target_bayes) {
      if (!both) spec_error("target_bayes needs both High and Low windows in the generated attention");
      const double sign = ch.gain < 0.0 ? -1.0 : 1.0;
      double hi = 1e-3;
      while (accuracy_for_gain(band, labels, ch, sign * hi, dimension(c), W, spec.frame_rate) < *ch.target_bayes) {
        hi *= 2.0;
        if (hi > 1e9) spec_error(std::string(name(c)) + ": target_bayes unreachable");
      }
      double lo = 0.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (accuracy_for_gain(band, labels, ch, sign * mid, dimension(c), W, spec.frame_rate) < *ch.target_bayes ? lo : hi) = mid;
      }
      ch.gain = sign * hi;
    }
    out.effective_gain[index_of(c)] = ch.gain;
    if (both) out.bayes_accuracy[index_of(c)] = window_mean_bayes_accuracy(band, labels, ch, dimension(c), W, spec.frame_rate);
  }

  for (int u = 0; u < spec.n_users; ++u) {
    std::mt19937_64& rng = rngs[u];
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution drop(spec.missing_second_rate);
    const AttentionSeries& a = out.attention[u];
    const std::size_t T = a.values.size();
    std::vector<bool> missing(T);
    for (std::size_t t = 0; t < T; ++t) missing[t] = spec.missing_second_rate > 0.0 && drop(rng);
    for (Category c : kAllCategories) {
      const ChannelModel& ch = channels[index_of(c)];
      if (!ch.enabled) continue;
      const std::size_t dim = dimension(c);
      FeatureTrack track;
      track.user_id = a.user_id;
      track.session_id = "s01";
      track.category = c;
      const double offset = ch.user_offset * z(rng);
      std::vector<double> e(dim);
      for (auto& v : e) v = ch.second_noise * z(rng);
      const double innov = ch.second_noise * std::sqrt(1.0 - ch.rho * ch.rho);
      for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) {
          for (auto& v : e) v = ch.rho * v + innov * z(rng);
        }
        const double centered = (a.values[t] - 50.0) / 50.0;
        const double scale = std::max(0.05, 1.0 + ch.volatility * centered);
        for (int f = 0; f < spec.frame_rate; ++f) {
          std::vector<double> row(dim);
          for (std::size_t k = 0; k < dim; ++k) {
            double v = ch.base + offset + ch.gain * centered + scale * (e[k] + ch.frame_noise * z(rng));
            if (c == Category::EB) v = std::clamp(v, 0.0, 1.0);
            row[k] = v;
          }
          if (missing[t]) continue;
          track.timestamps.push_back(static_cast<double>(t) + static_cast<double>(f) / spec.frame_rate);
          track.values.insert(track.values.end(), row.begin(), row.end());
        }
      }
      out.features.tracks.push_back(std::move(track));
    }
  }
  std::sort(out.features.tracks.begin(), out.features.tracks.end(), [](const FeatureTrack& x, const FeatureTrack& y) {
    return std::tie(x.user_id, x.session_id, x.category) < std::tie(y.user_id, y.session_id, y.category);
  });
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SynthSpec& spec, std::uint64_t seed, const SynthDataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "attention", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + (dir / "attention").string() + ": " + ec.message());
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "features.csv");
    write_frame_features(f, data.features);
  }
  for (const auto& a : data.attention) {
    auto f = open(dir / "attention" / (a.user_id + ".txt"));
    write_attention(f, a);
  }
  nlohmann::ordered_json gt;
  gt["seed"] = seed;
  gt["n_users"] = spec.n_users;
  gt["frame_rate"] = spec.frame_rate;
  gt["window_length"] = spec.labeling.window_length;
  gt["low_percentile"] = spec.labeling.low_percentile;
  gt["high_percentile"] = spec.labeling.high_percentile;
  gt["tau_low"] = data.thresholds.low;
  gt["tau_high"] = data.thresholds.high;
  gt["labeled_windows"] = data.labeled_windows;
  nlohmann::ordered_json cats = nlohmann::ordered_json::object();
  for (Category c : kAllCategories) {
    const ChannelModel& ch = spec.channels[index_of(c)];
    if (!ch.enabled) continue;
    nlohmann::ordered_json j;
    j["gain"] = data.effective_gain[index_of(c)];
    j["base"] = ch.base;
    j["second_noise"] = ch.second_noise;
    j["rho"] = ch.rho;
    j["frame_noise"] = ch.frame_noise;
    j["volatility"] = ch.volatility;
    j["user_offset"] = ch.user_offset;
    const auto& b = data.bayes_accuracy[index_of(c)];
    j["bayes_accuracy"] = b ? nlohmann::ordered_json(*b) : nlohmann::ordered_json(nullptr);
    cats[std::string(name(c))] = j;
  }
  gt["categories"] = cats;
  auto f = open(dir / "ground_truth.json");
  f << gt.dump(2) << '\n';
}

}  // namespace attnfuse
