#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "attnfuse/eval.hpp"
#include "attnfuse/fuse.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

struct ExperimentConfig {
  // Run environment; not part of the experiment identity.
  std::filesystem::path input;    // dataset directory
  std::filesystem::path windows;  // window dump (windows.jsonl); overrides input
  std::filesystem::path models;   // fold models from `train`
  std::filesystem::path output;
  unsigned threads = 1;

  LabelingConfig labeling;
  FusionSpec fusion;
  // Label thresholds over every user instead of the training users of each fold.
  bool pooled_thresholds = false;
  bool strict_leakage = false;
  bool exhaustive = false;  // score-sum over every non-empty category subset
  std::uint64_t seed = 0;
  MlpHyper mlp;
  SvmOptions svm;
  std::vector<double> c_grid = default_c_grid();
  double validation_fraction = 0.2;

  // Throws InvalidConfig.
  void validate() const;

  LoocvOptions loocv_options() const;
};

// Applies one `key = value` setting. Throws InvalidConfig on unknown keys or
// unparsable values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// Key-value file: one `key = value` per line, `#` starts a comment.
void load_config_text(ExperimentConfig& config, std::string_view text);
void load_config_file(ExperimentConfig& config, const std::filesystem::path& path);

// Experiment parameters in a fixed key order, excluding paths and threads.
std::string canonical_config_json(const ExperimentConfig& config);

// 16 hex digits of FNV-1a over canonical_config_json.
std::string config_hash(const ExperimentConfig& config);

}  // namespace attnfuse
