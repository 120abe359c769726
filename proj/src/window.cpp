#include "attnfuse/window.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "attnfuse/error.hpp"

namespace attnfuse {

SecondFeatureSeries per_second_average(const FeatureTrack& track, std::optional<std::size_t> seconds) {
  if (track.frames() == 0) {
    throw Error(ErrorKind::EmptySession, "track " + track.user_id + "/" + track.session_id + "/" + std::string(name(track.category)) + " has no frames");
  }
  const std::size_t n = dimension(track.category);
  const std::size_t T = seconds ? *seconds : static_cast<std::size_t>(std::floor(track.timestamps.back())) + 1;
  if (T == 0) throw Error(ErrorKind::EmptySession, "session of zero seconds");

  SecondFeatureSeries out{track.user_id, track.session_id, track.category, Matrix(n, T), std::vector<std::uint32_t>(T, 0)};
  for (std::size_t i = 0; i < track.frames(); ++i) {
    const auto t = static_cast<std::size_t>(std::floor(track.timestamps[i]));
    if (t >= T) break;
    auto f = track.frame(i);
    for (std::size_t k = 0; k < n; ++k) out.values(k, t) += f[k];
    ++out.counts[t];
  }
  std::optional<std::size_t> first_observed;
  for (std::size_t t = 0; t < T; ++t) {
    if (out.counts[t] == 0) continue;
    if (!first_observed) first_observed = t;
    for (std::size_t k = 0; k < n; ++k) out.values(k, t) /= out.counts[t];
  }
  if (!first_observed) {
    throw Error(ErrorKind::EmptySession, "track " + track.user_id + "/" + track.session_id + " has no frames inside the session span");
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (out.counts[t] != 0) continue;
    const std::size_t src = t < *first_observed ? *first_observed : t - 1;
    for (std::size_t k = 0; k < n; ++k) out.values(k, t) = out.values(k, src);
  }
  return out;
}

void LabelingConfig::validate() const {
  if (window_length < 1) throw Error(ErrorKind::InvalidConfig, "window length must be >= 1");
  if (!(low_percentile > 0.0 && low_percentile < high_percentile && high_percentile < 100.0)) {
    throw Error(ErrorKind::InvalidConfig, "percentiles must satisfy 0 < low < high < 100");
  }
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "max_missing_fraction must lie in [0,1]");
  }
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyStream, "percentile of an empty sample");
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Thresholds compute_label_thresholds(std::span<const double> pool, const LabelingConfig& config) {
  config.validate();
  if (pool.empty()) throw Error(ErrorKind::EmptyStream, "attention pool is empty");
  std::vector<double> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end());
  Thresholds t{percentile_sorted(sorted, config.low_percentile), percentile_sorted(sorted, config.high_percentile)};
  if (!(t.low < t.high)) {
    throw Error(ErrorKind::DegenerateDistribution, "low and high attention thresholds coincide at " + format_double(t.low));
  }
  return t;
}

std::string_view name(Label l) { return l == Label::High ? "High" : "Low"; }

std::optional<Label> label_for(double band_attention, const Thresholds& thresholds) {
  if (band_attention <= thresholds.low) return Label::Low;
  if (band_attention >= thresholds.high) return Label::High;
  return std::nullopt;
}

WindowExtraction extract_windows(std::span<const SecondFeatureSeries> series, const AttentionSeries& attention,
                                 const LabelingConfig& config, const Thresholds& thresholds) {
  config.validate();
  const std::size_t T = attention.values.size();
  const auto W = static_cast<std::size_t>(config.window_length);
  if (W > T) {
    throw Error(ErrorKind::WindowLongerThanSession, "window of " + std::to_string(W) + " s exceeds session of " + std::to_string(T) +
                                                         " s for user " + attention.user_id);
  }
  for (const auto& s : series) {
    if (s.seconds() != T) {
      throw Error(ErrorKind::DimensionMismatch, "series " + s.user_id + "/" + std::string(name(s.category)) + " spans " +
                                                    std::to_string(s.seconds()) + " s but attention spans " + std::to_string(T) + " s");
    }
    if (s.user_id != series.front().user_id || s.session_id != series.front().session_id) {
      throw Error(ErrorKind::InvalidSpec, "extract_windows requires series of a single session");
    }
  }

  std::vector<std::uint8_t> missing(T, 0);
  for (const auto& s : series) {
    for (std::size_t t = 0; t < T; ++t) missing[t] |= s.missing(t) ? 1 : 0;
  }

  WindowExtraction out;
  out.candidates = candidate_window_count(T, W);
  for (std::size_t start = 0; start + W <= T; ++start) {
    double sum = 0.0;
    std::size_t n_missing = 0;
    for (std::size_t t = start; t < start + W; ++t) {
      sum += attention.values[t];
      n_missing += missing[t];
    }
    const double band = sum / static_cast<double>(W);
    const auto label = label_for(band, thresholds);
    if (!label) {
      ++out.unlabeled;
      continue;
    }
    if (static_cast<double>(n_missing) > config.max_missing_fraction * static_cast<double>(W)) {
      ++out.dropped_missing;
      continue;
    }
    WindowSample w;
    w.user_id = series.empty() ? attention.user_id : series.front().user_id;
    w.session_id = series.empty() ? std::string() : series.front().session_id;
    w.start_second = static_cast<int>(start);
    w.label = *label;
    w.band_attention = band;
    for (const auto& s : series) {
      const std::size_t n = s.values.rows();
      Matrix local(n, W);
      for (std::size_t k = 0; k < n; ++k) {
        auto src = s.values.row(k).subspan(start, W);
        std::copy(src.begin(), src.end(), local.row(k).begin());
      }
      w.local[index_of(s.category)] = std::move(local);
    }
    out.windows.push_back(std::move(w));
  }
  return out;
}

void write_windows_jsonl(std::ostream& out, std::span<const WindowSample> windows) {
  for (const auto& w : windows) {
    nlohmann::json j;
    j["user_id"] = w.user_id;
    j["session_id"] = w.session_id;
    j["start_second"] = w.start_second;
    j["label"] = std::string(name(w.label));
    j["band_attention"] = w.band_attention;
    nlohmann::json local = nlohmann::json::object();
    for (Category c : kAllCategories) {
      if (!w.has(c)) continue;
      const Matrix& m = w.local_vector(c);
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      local[std::string(name(c))] = std::move(rows);
    }
    j["local"] = std::move(local);
    out << j.dump() << '\n';
  }
}

std::vector<WindowSample> read_windows_jsonl(std::istream& in) {
  std::vector<WindowSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      WindowSample w;
      w.user_id = j.at("user_id").get<std::string>();
      w.session_id = j.at("session_id").get<std::string>();
      w.start_second = j.at("start_second").get<int>();
      const auto label = j.at("label").get<std::string>();
      if (label != "High" && label != "Low") throw Error(ErrorKind::MalformedRow, "unknown label '" + label + "'");
      w.label = label == "High" ? Label::High : Label::Low;
      w.band_attention = j.at("band_attention").get<double>();
      for (const auto& [key, rows] : j.at("local").items()) {
        auto cat = parse_category(key);
        if (!cat) throw Error(ErrorKind::MalformedRow, "unknown category '" + key + "'");
        const std::size_t n = rows.size();
        const std::size_t cols = n ? rows[0].size() : 0;
        if (n != dimension(*cat)) throw Error(ErrorKind::DimensionMismatch, "category " + key + " has " + std::to_string(n) + " rows");
        Matrix m(n, cols);
        for (std::size_t r = 0; r < n; ++r) {
          if (rows[r].size() != cols) throw Error(ErrorKind::MalformedRow, "ragged local vector for " + key);
          for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c].get<double>();
        }
        w.local[index_of(*cat)] = std::move(m);
      }
      out.push_back(std::move(w));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedRow, "window dump line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "window dump line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace attnfuse
