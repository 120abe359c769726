#include "attnfuse/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "attnfuse/error.hpp"
#include "attnfuse/globalfeat.hpp"
#include "attnfuse/ingest.hpp"
#include "attnfuse/pipeline.hpp"

namespace attnfuse {
using ojson = nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
  f << text;
}

std::vector<Label> pooled_labels(const EvalReport& report) {
  std::vector<Label> out;
  for (const auto& f : report.folds) out.insert(out.end(), f.labels.begin(), f.labels.end());
  return out;
}

}  // namespace

std::vector<SubsetSummary> enumerate_subsets(const EvalReport& report, const std::vector<Category>& categories) {
  std::vector<SubsetSummary> out;
  const std::size_t k = categories.size();
  if (k == 0 || k > 16) return out;
  const auto labels = pooled_labels(report);
  for (const auto& f : report.folds) {
    if (f.category_scores.size() != k) return out;
  }
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    SubsetSummary s;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < k; ++c) {
      if (mask & (1u << c)) {
        s.categories.push_back(categories[c]);
        cols.push_back(c);
      }
    }
    std::vector<double> scores;
    for (const auto& f : report.folds) {
      for (std::size_t r = 0; r < f.scores.size(); ++r) {
        double sum = 0.0;
        for (std::size_t c : cols) sum += f.category_scores[c][r];
        scores.push_back(sum / static_cast<double>(cols.size()));
      }
    }
    s.oracle_accuracy = max_accuracy_threshold(scores, labels).accuracy;
    s.auc = roc(scores, labels).auc;
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const SubsetSummary& a, const SubsetSummary& b) {
    return a.categories.size() != b.categories.size() ? a.categories.size() < b.categories.size() : a.categories < b.categories;
  });
  return out;
}

std::string global_feature_name(const std::vector<Category>& categories, std::size_t index) {
  for (Category c : categories) {
    const std::size_t width = dimension(c) * kGlobalFeatures;
    if (index < width) {
      return std::string(name(c)) + "[" + std::to_string(index / kGlobalFeatures) + "].g" + std::to_string(index % kGlobalFeatures + 1);
    }
    index -= width;
  }
  return "?";
}

ojson report_json(const EvalReport& report, const ExperimentConfig& config) {
  ojson j;
  j["config"] = ojson::parse(canonical_config_json(config));
  j["config_hash"] = config_hash(config);
  j["seed"] = report.seed;

  ojson w;
  w["window_length"] = report.window_length;
  w["candidates"] = report.window_stats.candidates;
  w["dropped_missing"] = report.window_stats.dropped_missing;
  w["unlabeled_under_dump_thresholds"] = report.window_stats.unlabeled;
  w["labeled"] = report.windows_total;
  w["high"] = report.windows_high;
  w["low"] = report.windows_low;
  j["windows"] = w;

  ojson p;
  p["windows"] = report.pooled_windows;
  p["oracle_threshold"] = json_number(report.pooled_oracle_threshold);
  p["oracle_accuracy"] = report.pooled_oracle_accuracy;
  p["heldout_accuracy"] = report.pooled_heldout_accuracy;
  p["auc"] = report.pooled_roc.auc;
  p["mean_user_oracle_accuracy"] = report.mean_user_oracle_accuracy;
  p["mean_user_heldout_accuracy"] = report.mean_user_heldout_accuracy;
  j["pooled"] = p;

  ojson folds = ojson::array();
  for (const auto& f : report.folds) {
    ojson jf;
    jf["user"] = f.held_out_user;
    jf["tau_low"] = f.thresholds.low;
    jf["tau_high"] = f.thresholds.high;
    jf["windows"] = f.scores.size();
    jf["high"] = std::count(f.labels.begin(), f.labels.end(), Label::High);
    jf["train_windows"] = f.train_windows;
    jf["heldout_threshold"] = json_number(f.heldout_threshold);
    jf["heldout_accuracy"] = f.heldout_accuracy;
    jf["oracle_threshold"] = json_number(f.oracle_threshold);
    jf["oracle_accuracy"] = f.oracle_accuracy;
    jf["auc"] = f.auc ? ojson(*f.auc) : ojson(nullptr);
    jf["chosen_c"] = f.chosen_c;
    if (config.fusion.strategy == FusionStrategy::DpSelect) {
      jf["dp_selected_count"] = f.dp_selected.size();
      jf["dp_selected"] = f.dp_selected;
    }
    folds.push_back(jf);
  }
  j["folds"] = folds;

  ojson skipped = ojson::array();
  for (const auto& [user, reason] : report.skipped) skipped.push_back(ojson{{"user", user}, {"reason", reason}});
  j["skipped"] = skipped;

  if (config.fusion.strategy == FusionStrategy::DpSelect && !report.folds.empty()) {
    // Features chosen in every fold.
    std::map<std::size_t, std::size_t> counts;
    for (const auto& f : report.folds) {
      for (std::size_t i : f.dp_selected) ++counts[i];
    }
    ojson stable = ojson::array();
    for (const auto& [i, n] : counts) {
      if (n == report.folds.size()) stable.push_back(global_feature_name(config.fusion.categories, i));
    }
    j["dp_selected_in_every_fold"] = stable;
  }

  ojson uni = ojson::array();
  for (const auto& u : report.unimodal) {
    uni.push_back(ojson{{"category", std::string(name(u.category))}, {"oracle_accuracy", u.oracle_accuracy}, {"auc", u.auc}});
  }
  j["unimodal"] = uni;
  if (config.exhaustive) {
    ojson subsets = ojson::array();
    for (const auto& s : enumerate_subsets(report, config.fusion.categories)) {
      subsets.push_back(ojson{{"categories", join_categories(s.categories)}, {"oracle_accuracy", s.oracle_accuracy}, {"auc", s.auc}});
    }
    j["subsets"] = subsets;
  }
  return j;
}

std::string summary_text(const EvalReport& report, const ExperimentConfig& config) {
  std::ostringstream out;
  out << "config " << config_hash(config) << "  seed " << report.seed << '\n';
  out << "window " << report.window_length << " s  fusion " << name(config.fusion.strategy) << "  features "
      << name(config.fusion.feature_mode) << "  categories " << join_categories(config.fusion.categories) << '\n';
  out << "windows " << report.windows_total << " labeled (" << report.windows_high << " High, " << report.windows_low << " Low) of "
      << report.window_stats.candidates << " candidates\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %8s %10s %10s %8s\n", "user", "windows", "oracle", "held-out", "auc");
  out << line;
  for (const auto& f : report.folds) {
    std::snprintf(line, sizeof line, "%-10s %8zu %10s %10s %8s\n", f.held_out_user.c_str(), f.scores.size(),
                  fixed(f.oracle_accuracy).c_str(), fixed(f.heldout_accuracy).c_str(), f.auc ? fixed(*f.auc).c_str() : "-");
    out << line;
  }
  for (const auto& [user, reason] : report.skipped) out << user << " skipped: " << reason << '\n';
  out << '\n';
  out << "pooled accuracy (oracle threshold)    " << fixed(report.pooled_oracle_accuracy) << '\n';
  out << "pooled accuracy (held-out threshold)  " << fixed(report.pooled_heldout_accuracy) << '\n';
  out << "pooled AUC                            " << fixed(report.pooled_roc.auc) << '\n';
  out << "mean per-user accuracy (oracle)       " << fixed(report.mean_user_oracle_accuracy) << '\n';
  out << "mean per-user accuracy (held-out)     " << fixed(report.mean_user_heldout_accuracy) << '\n';
  if (!report.unimodal.empty()) {
    out << "\nunimodal (pooled, oracle threshold)\n";
    for (const auto& u : report.unimodal) out << "  " << name(u.category) << "  " << fixed(u.oracle_accuracy) << "  auc " << fixed(u.auc) << '\n';
  }
  if (config.exhaustive) {
    out << "\ncategory subsets (score sum, oracle threshold)\n";
    for (const auto& s : enumerate_subsets(report, config.fusion.categories)) {
      out << "  " << join_categories(s.categories) << "  " << fixed(s.oracle_accuracy) << "  auc " << fixed(s.auc) << '\n';
    }
  }
  return out.str();
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr\n";
  for (const auto& [fpr, tpr] : curve.points) out += format_double(fpr) + "," + format_double(tpr) + "\n";
  return out;
}

std::string scores_csv(const EvalReport& report) {
  std::string out = "user_id,start_second,label,score\n";
  for (const auto& f : report.folds) {
    for (std::size_t i = 0; i < f.scores.size(); ++i) {
      out += f.held_out_user + "," + std::to_string(f.start_seconds[i]) + "," + std::string(name(f.labels[i])) + "," +
             format_double(f.scores[i]) + "\n";
    }
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const EvalReport& report, const ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", report_json(report, config).dump(2) + "\n");
  write_text(dir / "summary.txt", summary_text(report, config));
  write_text(dir / "roc.csv", roc_csv(report.pooled_roc));
  write_text(dir / "scores.csv", scores_csv(report));
}

std::string comparison_table(const std::vector<nlohmann::json>& reports) {
  struct Cell {
    double oracle = 0.0;
    double heldout = 0.0;
  };
  std::map<std::string, std::map<int, Cell>> rows;
  std::set<int> windows;
  for (const auto& r : reports) {
    try {
      const auto& c = r.at("config");
      const std::string key = c.at("fusion").get<std::string>() + " " + c.at("feature_mode").get<std::string>() + " " +
                              c.at("categories").get<std::string>();
      const int w = c.at("window").get<int>();
      windows.insert(w);
      rows[key][w] = {r.at("pooled").at("oracle_accuracy").get<double>(), r.at("pooled").at("heldout_accuracy").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedRow, std::string("report is missing fields: ") + e.what());
    }
  }
  std::size_t width = 6;
  for (const auto& [key, _] : rows) width = std::max(width, key.size());
  std::ostringstream out;
  out << std::string(width, ' ');
  for (int w : windows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "  %17s", ("W=" + std::to_string(w)).c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& [key, cells] : rows) {
    out << key << std::string(width - key.size(), ' ');
    for (int w : windows) {
      auto it = cells.find(w);
      char buf[32];
      if (it == cells.end()) {
        std::snprintf(buf, sizeof buf, "  %17s", "-");
      } else {
        std::snprintf(buf, sizeof buf, "  %7.2f (%7.2f)", 100.0 * it->second.oracle, 100.0 * it->second.heldout);
      }
      out << buf;
    }
    out << '\n';
  }
  out << "\npooled accuracy in percent: oracle threshold (held-out threshold)\n";
  return out.str();
}

}  // namespace attnfuse
