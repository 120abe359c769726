#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnfuse/config.hpp"
#include "attnfuse/eval.hpp"

namespace attnfuse {

struct SubsetSummary {
  std::vector<Category> categories;
  double oracle_accuracy = 0.0;
  double auc = 0.0;
};

// Score-sum fusion of every non-empty subset of the report's categories,
// computed from the held-out per-category scores (oracle-threshold mode).
std::vector<SubsetSummary> enumerate_subsets(const EvalReport& report, const std::vector<Category>& categories);

// Name of column `index` of the concatenated global vector over `categories`,
// e.g. "Exp[3].g12".
std::string global_feature_name(const std::vector<Category>& categories, std::size_t index);

nlohmann::ordered_json report_json(const EvalReport& report, const ExperimentConfig& config);
std::string summary_text(const EvalReport& report, const ExperimentConfig& config);
std::string roc_csv(const RocCurve& curve);
std::string scores_csv(const EvalReport& report);

// report.json, summary.txt, roc.csv and scores.csv under dir.
void write_report(const std::filesystem::path& dir, const EvalReport& report, const ExperimentConfig& config);

// Table of pooled accuracies across report.json files: one row per
// (fusion, feature mode, categories), one column per window length.
std::string comparison_table(const std::vector<nlohmann::json>& reports);

}  // namespace attnfuse
