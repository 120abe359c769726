#include "attnfuse/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "attnfuse/error.hpp"
#include "attnfuse/hash.hpp"
#include "attnfuse/ingest.hpp"

namespace attnfuse {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorKind::InvalidConfig, std::string(key) + " = '" + std::string(value) + "': expected " + std::string(expected));
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad(key, v, "a real number");
  return out;
}

template <class T>
T to_integer(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "an integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "true or false");
}

FusionStrategy to_strategy(std::string_view key, std::string_view v) {
  for (auto s : {FusionStrategy::None, FusionStrategy::Sum, FusionStrategy::NeuralNet, FusionStrategy::DpSelect}) {
    if (name(s) == v) return s;
  }
  bad(key, v, "one of none, sum, nn, dp");
}

FeatureMode to_mode(std::string_view key, std::string_view v) {
  if (v == "local") return FeatureMode::Local;
  if (v == "global") return FeatureMode::Global;
  bad(key, v, "local or global");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (labeling.window_length != 30 && labeling.window_length != 60 && labeling.window_length != 120) {
    throw Error(ErrorKind::InvalidConfig, "window must be 30, 60 or 120, got " + std::to_string(labeling.window_length));
  }
  labeling.validate();
  fusion.validate();
  if (exhaustive && fusion.strategy != FusionStrategy::Sum) {
    throw Error(ErrorKind::InvalidConfig, "exhaustive subset evaluation requires fusion sum");
  }
  if (threads < 1) throw Error(ErrorKind::InvalidConfig, "threads must be at least 1");
  if (!(mlp.learning_rate > 0.0) || mlp.epochs < 0 || !(mlp.dropout_rate >= 0.0 && mlp.dropout_rate < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "mlp settings out of range");
  }
  if (!(svm.tol > 0.0) || svm.max_updates == 0) throw Error(ErrorKind::InvalidConfig, "svm settings out of range");
  if (c_grid.empty()) throw Error(ErrorKind::InvalidConfig, "c_grid is empty");
  for (double c : c_grid) {
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidConfig, "c_grid values must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "validation_fraction must lie in (0,1)");
  }
}

LoocvOptions ExperimentConfig::loocv_options() const {
  LoocvOptions o;
  o.fusion = fusion;
  o.grid.grid = c_grid;
  o.grid.validation_fraction = validation_fraction;
  o.grid.svm = svm;
  o.mlp = mlp;
  o.seed = seed;
  o.threads = threads;
  o.strict_leakage = strict_leakage;
  return o;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  if (key == "input") {
    c.input = std::string(v);
  } else if (key == "windows") {
    c.windows = std::string(v);
  } else if (key == "models") {
    c.models = std::string(v);
  } else if (key == "output") {
    c.output = std::string(v);
  } else if (key == "threads") {
    c.threads = to_integer<unsigned>(key, v);
  } else if (key == "window") {
    c.labeling.window_length = to_integer<int>(key, v);
  } else if (key == "tau_low") {
    c.labeling.low_percentile = to_real(key, v);
  } else if (key == "tau_high") {
    c.labeling.high_percentile = to_real(key, v);
  } else if (key == "max_missing") {
    c.labeling.max_missing_fraction = to_real(key, v);
  } else if (key == "feature_mode") {
    c.fusion.feature_mode = to_mode(key, v);
  } else if (key == "fusion") {
    c.fusion.strategy = to_strategy(key, v);
  } else if (key == "categories") {
    c.fusion.categories = parse_category_list(v);
  } else if (key == "fraction") {
    c.fusion.dp_fraction = to_real(key, v);
  } else if (key == "seed") {
    c.seed = to_integer<std::uint64_t>(key, v);
  } else if (key == "strict_leakage") {
    c.strict_leakage = to_bool(key, v);
  } else if (key == "pooled_thresholds") {
    c.pooled_thresholds = to_bool(key, v);
  } else if (key == "exhaustive") {
    c.exhaustive = to_bool(key, v);
  } else if (key == "mlp_lr") {
    c.mlp.learning_rate = to_real(key, v);
  } else if (key == "mlp_epochs") {
    c.mlp.epochs = to_integer<int>(key, v);
  } else if (key == "mlp_dropout") {
    c.mlp.dropout_rate = to_real(key, v);
  } else if (key == "svm_tol") {
    c.svm.tol = to_real(key, v);
  } else if (key == "svm_max_updates") {
    c.svm.max_updates = to_integer<std::size_t>(key, v);
  } else if (key == "validation_fraction") {
    c.validation_fraction = to_real(key, v);
  } else if (key == "c_grid") {
    c.c_grid.clear();
    std::size_t pos = 0;
    while (pos <= v.size()) {
      std::size_t comma = v.find(',', pos);
      if (comma == std::string_view::npos) comma = v.size();
      c.c_grid.push_back(to_real(key, trim(v.substr(pos, comma - pos))));
      pos = comma + 1;
    }
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown config key '" + std::string(key) + "'");
  }
}

void load_config_text(ExperimentConfig& config, std::string_view text) {
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void load_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  load_config_text(config, text);
}

std::string canonical_config_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["window"] = c.labeling.window_length;
  j["tau_low"] = c.labeling.low_percentile;
  j["tau_high"] = c.labeling.high_percentile;
  j["max_missing"] = c.labeling.max_missing_fraction;
  j["feature_mode"] = std::string(name(c.fusion.feature_mode));
  j["fusion"] = std::string(name(c.fusion.strategy));
  j["categories"] = join_categories(c.fusion.categories);
  j["fraction"] = c.fusion.dp_fraction;
  j["seed"] = c.seed;
  j["strict_leakage"] = c.strict_leakage;
  j["pooled_thresholds"] = c.pooled_thresholds;
  j["exhaustive"] = c.exhaustive;
  j["mlp_lr"] = c.mlp.learning_rate;
  j["mlp_epochs"] = c.mlp.epochs;
  j["mlp_dropout"] = c.mlp.dropout_rate;
  j["svm_tol"] = c.svm.tol;
  j["svm_max_updates"] = c.svm.max_updates;
  j["c_grid"] = c.c_grid;
  j["validation_fraction"] = c.validation_fraction;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config_json(config))));
  return buf;
}

}  // namespace attnfuse
