#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/category.hpp"
#include "attnfuse/ingest.hpp"
#include "attnfuse/matrix.hpp"

namespace attnfuse {

// Per-second means of one feature track: values is N x T.
struct SecondFeatureSeries {
  std::string user_id;
  std::string session_id;
  Category category = Category::EB;
  Matrix values;
  std::vector<std::uint32_t> counts;  // frames averaged into each second; 0 means filled

  std::size_t seconds() const noexcept { return values.cols(); }
  bool missing(std::size_t t) const { return counts[t] == 0; }
};

// Seconds without frames repeat the previous second (or the first observed
// second when at the start of the session). `seconds` defaults to
// floor(last timestamp) + 1; frames at or past it are ignored.
SecondFeatureSeries per_second_average(const FeatureTrack& track, std::optional<std::size_t> seconds = std::nullopt);

struct LabelingConfig {
  int window_length = 60;
  double low_percentile = 10.0;
  double high_percentile = 90.0;
  double max_missing_fraction = 0.1;

  // Throws InvalidConfig.
  void validate() const;
};

struct Thresholds {
  double low = 0.0;
  double high = 0.0;
  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

// Percentile with linear interpolation between order statistics of the
// sorted sample (rank = p/100 * (n-1)).
double percentile_sorted(std::span<const double> sorted, double p);

Thresholds compute_label_thresholds(std::span<const double> pool, const LabelingConfig& config);

enum class Label : std::uint8_t { Low = 0, High = 1 };

std::string_view name(Label l);

// Label for a band attention value, or nullopt when it falls between the thresholds.
std::optional<Label> label_for(double band_attention, const Thresholds& thresholds);

struct WindowSample {
  std::string user_id;
  std::string session_id;
  int start_second = 0;
  Label label = Label::Low;
  double band_attention = 0.0;
  // Indexed by index_of(Category); empty for categories not extracted.
  std::array<Matrix, kNumCategories> local;

  bool has(Category c) const { return !local[index_of(c)].empty(); }
  const Matrix& local_vector(Category c) const { return local[index_of(c)]; }
};

// Window counts before the label and missing-data filters.
struct WindowStats {
  std::size_t candidates = 0;
  std::size_t dropped_missing = 0;
  std::size_t unlabeled = 0;
};

struct WindowExtraction {
  std::vector<WindowSample> windows;
  std::size_t candidates = 0;
  std::size_t dropped_missing = 0;
  std::size_t unlabeled = 0;
};

inline std::size_t candidate_window_count(std::size_t seconds, std::size_t window_length) {
  return seconds >= window_length ? seconds - window_length + 1 : 0;
}

// All series must belong to one session and span attention.values.size()
// seconds. Windows are returned in start-second order.
WindowExtraction extract_windows(std::span<const SecondFeatureSeries> series, const AttentionSeries& attention,
                                 const LabelingConfig& config, const Thresholds& thresholds);

// JSON Lines cache: one WindowSample per line.
void write_windows_jsonl(std::ostream& out, std::span<const WindowSample> windows);
std::vector<WindowSample> read_windows_jsonl(std::istream& in);

}  // namespace attnfuse
