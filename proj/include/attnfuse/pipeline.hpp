#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnfuse/config.hpp"
#include "attnfuse/eval.hpp"
#include "attnfuse/ingest.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

// Dataset directory layout:
//   features.csv        frame features
//   landmarks.csv       optional; adds EAR, HS and NS tracks
//   attention/<u>.txt   one attention value per second for user u
struct RawDataset {
  FrameFeatureStream features;
  std::vector<AttentionSeries> attention;  // sorted by user
};

RawDataset load_dataset(const std::filesystem::path& dir);

// Windows every user with the loosest thresholds over all folds so that each
// fold can relabel the dump under its own thresholds. With pooled = false the
// thresholds of fold u come from every user except u.
WindowDataset build_window_dataset(const RawDataset& raw, const LabelingConfig& labeling, bool pooled);

// windows.jsonl plus a windows.meta.json sidecar with the thresholds.
std::filesystem::path meta_path(const std::filesystem::path& windows_jsonl);
void write_window_dataset(const std::filesystem::path& windows_jsonl, const WindowDataset& data);
WindowDataset read_window_dataset(const std::filesystem::path& windows_jsonl);

// Cache file for the windows of `input` under the labeling settings of
// `config`. The directory is ATTNFUSE_CACHE_DIR when set, else
// <output>/cache. The name changes whenever an input file changes.
std::filesystem::path window_cache_path(const ExperimentConfig& config);

// Loads windows from config.windows, the cache, or the dataset (filling the
// cache).
WindowDataset obtain_windows(const ExperimentConfig& config);

// JSON with infinities stored as the strings "inf" and "-inf".
nlohmann::ordered_json json_number(double v);
double number_from_json(const nlohmann::json& j);

void save_fold_models(const std::filesystem::path& path, const std::vector<FoldModel>& models, const std::string& config_hash);
// Throws InvalidConfig when the file was trained under another config hash.
std::map<std::string, FoldModel> load_fold_models(const std::filesystem::path& path, const std::string& config_hash);

}  // namespace attnfuse
