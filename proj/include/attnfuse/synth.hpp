#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnfuse/category.hpp"
#include "attnfuse/ingest.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

// Every component of a category follows
//   x = base + gain * (a_t - 50) / 50 + e_t + frame noise
// where a_t is the attention at second t, e_t is AR(1) with marginal standard
// deviation second_noise and lag-one correlation rho, and frame noise is i.i.d.
// with standard deviation frame_noise. volatility scales both noise terms by
// (1 + volatility * (a_t - 50) / 50), clamped at 0.05.
struct ChannelModel {
  bool enabled = true;
  double base = 0.0;
  double gain = 0.0;
  double second_noise = 1.0;
  double rho = 0.0;
  double frame_noise = 0.0;
  double volatility = 0.0;
  double user_offset = 0.0;  // standard deviation of a per-user constant offset
  // When set, gain is replaced by the smallest |gain| whose window-mean Bayes
  // accuracy reaches this target (sign of gain is kept; positive if gain = 0).
  std::optional<double> target_bayes;
};

struct SynthSpec {
  int n_users = 10;
  int min_seconds = 900;
  int max_seconds = 1800;
  int frame_rate = 2;
  // Attention walk: a_{t+1} = clip(a_t + reversion * (50 - a_t) + step * N(0,1), 0, 100).
  double attention_step = 4.0;
  double attention_reversion = 0.01;
  bool integer_attention = false;
  double missing_second_rate = 0.0;  // probability a second has no frames at all
  // Labeling used for the Bayes oracle.
  LabelingConfig labeling;
  std::array<ChannelModel, kNumCategories> channels{};

  // Throws InvalidSpec.
  void validate() const;
};

// A spec with every category enabled, EB carrying a negative gain and the
// others positive, at moderate noise.
SynthSpec default_synth_spec();

struct SynthDataset {
  FrameFeatureStream features;
  std::vector<AttentionSeries> attention;
  Thresholds thresholds;  // pooled over every user
  std::size_t labeled_windows = 0;
  std::array<std::optional<double>, kNumCategories> bayes_accuracy{};
  std::array<double, kNumCategories> effective_gain{};
};

// Variance of the mean of `w` consecutive values of a unit-variance AR(1)
// process with lag-one correlation rho.
double ar1_mean_variance(double rho, int w);

// Accuracy of the best threshold rule on the window mean of one channel,
// averaged over the given band attentions (labeled windows only).
double window_mean_bayes_accuracy(std::span<const double> band, std::span<const Label> labels, const ChannelModel& ch,
                                  std::size_t dim, int window_length, int frame_rate);

SynthDataset generate(const SynthSpec& spec, std::uint64_t seed);

// Writes features.csv, attention/<user>.txt and ground_truth.json under dir.
void write_dataset(const std::filesystem::path& dir, const SynthSpec& spec, std::uint64_t seed, const SynthDataset& data);

}  // namespace attnfuse
