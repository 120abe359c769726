#include "attnfuse/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "attnfuse/derive.hpp"
#include "attnfuse/error.hpp"
#include "attnfuse/hash.hpp"

namespace attnfuse {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
  return f;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + p.string());
  return f;
}

std::vector<fs::path> attention_files(const fs::path& dir) {
  std::vector<fs::path> out;
  const fs::path adir = dir / "attention";
  if (!fs::is_directory(adir)) return out;
  for (const auto& e : fs::directory_iterator(adir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Thresholds thresholds_excluding(const std::vector<AttentionSeries>& attention, const std::string* excluded,
                                const LabelingConfig& labeling) {
  std::vector<double> pool;
  for (const auto& a : attention) {
    if (excluded && a.user_id == *excluded) continue;
    pool.insert(pool.end(), a.values.begin(), a.values.end());
  }
  if (pool.empty()) throw Error(ErrorKind::InsufficientUsers, "no attention values to derive thresholds from");
  return compute_label_thresholds(pool, labeling);
}

ojson thresholds_json(const Thresholds& t) { return ojson{{"low", t.low}, {"high", t.high}}; }
Thresholds thresholds_from(const nlohmann::json& j) { return {j.at("low").get<double>(), j.at("high").get<double>()}; }

ojson svm_json(const LinearSvmModel& m) {
  ojson j;
  j["C"] = m.C;
  j["b"] = m.b;
  j["w"] = m.w;
  j["feature_means"] = m.feature_means;
  j["feature_stds"] = m.feature_stds;
  return j;
}

LinearSvmModel svm_from(const nlohmann::json& j) {
  LinearSvmModel m;
  m.C = j.at("C").get<double>();
  m.b = j.at("b").get<double>();
  m.w = j.at("w").get<std::vector<double>>();
  m.feature_means = j.at("feature_means").get<std::vector<double>>();
  m.feature_stds = j.at("feature_stds").get<std::vector<double>>();
  if (m.feature_means.size() != m.w.size() || m.feature_stds.size() != m.w.size()) {
    throw Error(ErrorKind::DimensionMismatch, "svm model arrays differ in length");
  }
  m.finalize();
  return m;
}

ojson normalizer_json(const ScoreNormalizer& n) { return ojson{{"min", n.min}, {"max", n.max}}; }
ScoreNormalizer normalizer_from(const nlohmann::json& j) { return {j.at("min").get<double>(), j.at("max").get<double>()}; }

FusionStrategy strategy_from(const std::string& s) {
  for (auto v : {FusionStrategy::None, FusionStrategy::Sum, FusionStrategy::NeuralNet, FusionStrategy::DpSelect}) {
    if (name(v) == s) return v;
  }
  throw Error(ErrorKind::MalformedRow, "unknown fusion strategy '" + s + "' in model file");
}

}  // namespace

RawDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "dataset directory " + dir.string() + " does not exist");
  RawDataset raw;
  const fs::path features = dir / "features.csv";
  const fs::path landmarks = dir / "landmarks.csv";
  const bool has_features = fs::exists(features);
  const bool has_landmarks = fs::exists(landmarks);
  if (!has_features && !has_landmarks) {
    throw Error(ErrorKind::Io, "dataset " + dir.string() + " has neither features.csv nor landmarks.csv");
  }
  if (has_features) raw.features = parse_frame_features(features);
  if (has_landmarks) {
    const auto frames = parse_landmarks(landmarks);
    const FrameFeatureStream& stream = raw.features;
    auto session_of = [&stream](const std::string& user) {
      const auto s = stream.sessions(user);
      return s.empty() ? std::string("s01") : s.front();
    };
    merge_tracks(raw.features, landmark_tracks(frames, session_of));
  }
  for (const auto& p : attention_files(dir)) raw.attention.push_back(parse_attention_stream(p));
  if (raw.attention.empty()) throw Error(ErrorKind::EmptyStream, "no attention files under " + (dir / "attention").string());
  return raw;
}

WindowDataset build_window_dataset(const RawDataset& raw, const LabelingConfig& labeling, bool pooled) {
  labeling.validate();
  WindowDataset data;
  data.window_length = labeling.window_length;

  // Categories present for every user with attention.
  std::vector<Category> present;
  for (Category c : kAllCategories) {
    bool all = true;
    for (const auto& a : raw.attention) {
      const auto sessions = raw.features.sessions(a.user_id);
      all = all && !sessions.empty() && raw.features.find(a.user_id, sessions.front(), c) != nullptr;
    }
    if (all) present.push_back(c);
  }
  if (present.empty()) throw Error(ErrorKind::MissingCategory, "no feature category is present for every user");

  const bool per_fold = !pooled && raw.attention.size() >= 2;
  data.thresholds_include_held_out = !per_fold;
  if (per_fold) {
    bool first = true;
    for (const auto& a : raw.attention) {
      const Thresholds t = thresholds_excluding(raw.attention, &a.user_id, labeling);
      data.fold_thresholds[a.user_id] = t;
      data.dump_thresholds = first ? t : Thresholds{std::max(data.dump_thresholds.low, t.low), std::min(data.dump_thresholds.high, t.high)};
      first = false;
    }
  } else {
    data.dump_thresholds = thresholds_excluding(raw.attention, nullptr, labeling);
  }

  for (const auto& a : raw.attention) {
    const auto sessions = raw.features.sessions(a.user_id);
    if (sessions.size() != 1) {
      throw Error(ErrorKind::DimensionMismatch, "user " + a.user_id + " has " + std::to_string(sessions.size()) +
                                                    " sessions; one attention file covers exactly one session");
    }
    std::vector<SecondFeatureSeries> series;
    for (Category c : present) {
      try {
        series.push_back(per_second_average(*raw.features.find(a.user_id, sessions.front(), c), a.values.size()));
      } catch (const Error& e) {
        throw Error(e.kind(), "user " + a.user_id + ", " + std::string(name(c)) + ": " + e.what());
      }
    }
    WindowExtraction ex;
    try {
      ex = extract_windows(series, a, labeling, data.dump_thresholds);
    } catch (const Error& e) {
      throw Error(e.kind(), "user " + a.user_id + ": " + e.what());
    }
    data.stats.candidates += ex.candidates;
    data.stats.dropped_missing += ex.dropped_missing;
    data.stats.unlabeled += ex.unlabeled;
    for (auto& w : ex.windows) data.windows.push_back(std::move(w));
  }
  return data;
}

fs::path meta_path(const fs::path& windows_jsonl) {
  fs::path p = windows_jsonl;
  p.replace_extension(".meta.json");
  return p;
}

void write_window_dataset(const fs::path& windows_jsonl, const WindowDataset& data) {
  {
    auto f = open_out(windows_jsonl);
    write_windows_jsonl(f, data.windows);
    if (!f) throw Error(ErrorKind::Io, "write failed for " + windows_jsonl.string());
  }
  ojson meta;
  meta["window_length"] = data.window_length;
  meta["dump_thresholds"] = thresholds_json(data.dump_thresholds);
  ojson folds = ojson::object();
  for (const auto& [user, t] : data.fold_thresholds) folds[user] = thresholds_json(t);
  meta["fold_thresholds"] = folds;
  meta["thresholds_include_held_out"] = data.thresholds_include_held_out;
  meta["candidates"] = data.stats.candidates;
  meta["dropped_missing"] = data.stats.dropped_missing;
  meta["unlabeled"] = data.stats.unlabeled;
  auto f = open_out(meta_path(windows_jsonl));
  f << meta.dump(2) << '\n';
}

WindowDataset read_window_dataset(const fs::path& windows_jsonl) {
  WindowDataset data;
  {
    auto f = open_in(windows_jsonl);
    data.windows = read_windows_jsonl(f);
  }
  const fs::path mp = meta_path(windows_jsonl);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(mp));
    data.window_length = meta.at("window_length").get<int>();
    data.dump_thresholds = thresholds_from(meta.at("dump_thresholds"));
    for (const auto& [user, t] : meta.at("fold_thresholds").items()) data.fold_thresholds[user] = thresholds_from(t);
    data.thresholds_include_held_out = meta.at("thresholds_include_held_out").get<bool>();
    data.stats.candidates = meta.value("candidates", std::size_t{0});
    data.stats.dropped_missing = meta.value("dropped_missing", std::size_t{0});
    data.stats.unlabeled = meta.value("unlabeled", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRow, mp.string() + ": " + e.what());
  }
  for (const auto& w : data.windows) {
    for (Category c : kAllCategories) {
      if (w.has(c) && w.local_vector(c).cols() != static_cast<std::size_t>(data.window_length)) {
        throw Error(ErrorKind::DimensionMismatch, windows_jsonl.string() + ": window " + w.user_id + "@" + std::to_string(w.start_second) +
                                                      " is not " + std::to_string(data.window_length) + " seconds long");
      }
    }
  }
  return data;
}

fs::path window_cache_path(const ExperimentConfig& config) {
  fs::path dir;
  if (const char* env = std::getenv("ATTNFUSE_CACHE_DIR"); env && *env) {
    dir = env;
  } else {
    dir = config.output.empty() ? fs::path("cache") : config.output / "cache";
  }
  std::error_code ec;
  std::string key = fs::weakly_canonical(config.input, ec).string();
  key += "|" + std::to_string(config.labeling.window_length) + "|" + format_double(config.labeling.low_percentile) + "|" +
         format_double(config.labeling.high_percentile) + "|" + format_double(config.labeling.max_missing_fraction) + "|" +
         (config.pooled_thresholds ? "pooled" : "per-fold");
  std::vector<fs::path> files{config.input / "features.csv", config.input / "landmarks.csv"};
  for (const auto& p : attention_files(config.input)) files.push_back(p);
  for (const auto& p : files) {
    if (!fs::exists(p)) continue;
    key += "|" + p.filename().string() + ":" + std::to_string(fs::file_size(p)) + ":" +
           std::to_string(fs::last_write_time(p).time_since_epoch().count());
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return dir / ("windows-" + std::string(buf) + ".jsonl");
}

WindowDataset obtain_windows(const ExperimentConfig& config) {
  if (!config.windows.empty()) return read_window_dataset(config.windows);
  if (config.input.empty()) throw Error(ErrorKind::InvalidConfig, "either an input dataset or a window dump is required");
  const fs::path cache = window_cache_path(config);
  if (fs::exists(cache) && fs::exists(meta_path(cache))) return read_window_dataset(cache);
  WindowDataset data = build_window_dataset(load_dataset(config.input), config.labeling, config.pooled_thresholds);
  std::error_code ec;
  fs::create_directories(cache.parent_path(), ec);
  if (!ec) {
    // Written under a temporary name so a partial cache is never picked up.
    const fs::path tmp = cache.parent_path() / (cache.stem().string() + ".tmp.jsonl");
    write_window_dataset(tmp, data);
    fs::rename(meta_path(tmp), meta_path(cache), ec);
    if (!ec) fs::rename(tmp, cache, ec);
  }
  return data;
}

ojson json_number(double v) {
  if (std::isnan(v)) return ojson(nullptr);
  if (std::isinf(v)) return ojson(v > 0 ? "inf" : "-inf");
  return ojson(v);
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    throw Error(ErrorKind::MalformedRow, "expected a number, got '" + s + "'");
  }
  if (j.is_null()) return NAN;
  return j.get<double>();
}

void save_fold_models(const fs::path& path, const std::vector<FoldModel>& models, const std::string& config_hash) {
  ojson root;
  root["config_hash"] = config_hash;
  ojson folds = ojson::array();
  for (const auto& m : models) {
    ojson f;
    f["held_out_user"] = m.held_out_user;
    f["thresholds"] = thresholds_json(m.thresholds);
    f["strategy"] = std::string(name(m.strategy));
    ojson cats = ojson::array();
    for (const auto& c : m.categories) {
      ojson jc;
      jc["category"] = std::string(name(c.category));
      jc["svm"] = svm_json(c.svm);
      jc["normalizer"] = normalizer_json(c.normalizer);
      jc["validation_accuracy"] = c.validation_accuracy;
      cats.push_back(jc);
    }
    f["categories"] = cats;
    if (m.mlp) {
      f["mlp"] = ojson{{"parameters", m.mlp->parameters()}, {"dropout_rate", m.mlp->dropout_rate}, {"seed", m.mlp->seed}};
    }
    if (m.dp_svm) {
      f["dp_selected"] = m.dp_selected;
      f["dp_svm"] = svm_json(*m.dp_svm);
      f["dp_normalizer"] = normalizer_json(m.dp_normalizer);
    }
    f["heldout_threshold"] = json_number(m.heldout_threshold);
    f["train_windows"] = m.train_windows;
    folds.push_back(f);
  }
  root["folds"] = folds;
  auto out = open_out(path);
  out << root.dump() << '\n';
}

std::map<std::string, FoldModel> load_fold_models(const fs::path& path, const std::string& config_hash) {
  std::map<std::string, FoldModel> out;
  try {
    const auto root = nlohmann::json::parse(read_file(path));
    const auto hash = root.at("config_hash").get<std::string>();
    if (hash != config_hash) {
      throw Error(ErrorKind::InvalidConfig, path.string() + " was trained under config " + hash + ", current config is " + config_hash);
    }
    for (const auto& f : root.at("folds")) {
      FoldModel m;
      m.held_out_user = f.at("held_out_user").get<std::string>();
      m.thresholds = thresholds_from(f.at("thresholds"));
      m.strategy = strategy_from(f.at("strategy").get<std::string>());
      for (const auto& jc : f.at("categories")) {
        CategoryModel c;
        const auto cat_name = jc.at("category").get<std::string>();
        const auto cat = parse_category(cat_name);
        if (!cat) throw Error(ErrorKind::MalformedRow, path.string() + ": unknown category '" + cat_name + "'");
        c.category = *cat;
        c.svm = svm_from(jc.at("svm"));
        c.normalizer = normalizer_from(jc.at("normalizer"));
        c.validation_accuracy = jc.at("validation_accuracy").get<std::vector<double>>();
        m.categories.push_back(std::move(c));
      }
      if (f.contains("mlp")) {
        MlpFusionModel mlp;
        mlp.set_parameters(f.at("mlp").at("parameters").get<std::vector<double>>());
        mlp.dropout_rate = f.at("mlp").at("dropout_rate").get<double>();
        mlp.seed = f.at("mlp").at("seed").get<std::uint64_t>();
        m.mlp = mlp;
      }
      if (f.contains("dp_svm")) {
        m.dp_selected = f.at("dp_selected").get<std::vector<std::size_t>>();
        m.dp_svm = svm_from(f.at("dp_svm"));
        m.dp_normalizer = normalizer_from(f.at("dp_normalizer"));
      }
      m.heldout_threshold = number_from_json(f.at("heldout_threshold"));
      m.train_windows = f.at("train_windows").get<std::size_t>();
      out[m.held_out_user] = std::move(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRow, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace attnfuse
