#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "attnfuse/config.hpp"
#include "attnfuse/error.hpp"
#include "attnfuse/eval.hpp"
#include "attnfuse/pipeline.hpp"
#include "attnfuse/report.hpp"
#include "attnfuse/synth.hpp"

namespace fs = std::filesystem;
using namespace attnfuse;

namespace {

// Flags shared by windows, train and evaluate. String-valued so that they
// can be layered over the config file through apply_setting.
struct ExperimentFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool strict_leakage = false;
  bool pooled_thresholds = false;
  bool exhaustive = false;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "key = value experiment file; flags override it");
    auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    };
    opt("--input", "input", "dataset directory");
    opt("--windows", "windows", "window dump (windows.jsonl) to use instead of --input");
    opt("--output", "output", "output directory");
    opt("--window", "window", "window length in seconds: 30, 60 or 120");
    opt("--tau-low", "tau_low", "Low label percentile (default 10)");
    opt("--tau-high", "tau_high", "High label percentile (default 90)");
    opt("--max-missing", "max_missing", "largest fraction of filled seconds per window (default 0.1)");
    opt("--feature-mode", "feature_mode", "local or global");
    opt("--fusion", "fusion", "sum, nn, dp or none");
    opt("--categories", "categories", "comma-separated subset of EB,EAR,HS,NS,HP,Exp,H");
    opt("--fraction", "fraction", "fraction of features kept by dp selection (default 0.10)");
    opt("--seed", "seed", "run seed");
    opt("--threads", "threads", "worker threads for folds");
    opt("--mlp-lr", "mlp_lr", "fusion network learning rate");
    opt("--mlp-epochs", "mlp_epochs", "fusion network epochs");
    opt("--c-grid", "c_grid", "comma-separated SVM C values");
    app->add_flag("--strict-leakage", strict_leakage, "reject any use of held-out data in thresholds or feature selection");
    app->add_flag("--pooled-thresholds", pooled_thresholds, "label thresholds over every user, held-out included");
    app->add_flag("--exhaustive", exhaustive, "also report score sum over every category subset");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!config_file.empty()) load_config_file(c, config_file);
    for (const auto& [k, v] : values) apply_setting(c, k, v);
    if (strict_leakage) c.strict_leakage = true;
    if (pooled_thresholds) c.pooled_thresholds = true;
    if (exhaustive) c.exhaustive = true;
    c.validate();
    return c;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

fs::path output_dir(const ExperimentConfig& c) { return c.output.empty() ? fs::path(".") : c.output; }

int run_synth(const fs::path& out, SynthSpec spec, std::uint64_t seed, std::optional<double> target, const std::string& cats,
              double volatility) {
  if (!cats.empty()) {
    const auto enabled = parse_category_list(cats);
    for (Category c : kAllCategories) {
      spec.channels[index_of(c)].enabled = std::find(enabled.begin(), enabled.end(), c) != enabled.end();
    }
  }
  for (auto& ch : spec.channels) {
    if (target) ch.target_bayes = target;
    ch.volatility = volatility;
  }
  const SynthDataset data = generate(spec, seed);
  write_dataset(out, spec, seed, data);
  std::cout << "wrote " << spec.n_users << " users to " << out.string() << " (" << data.labeled_windows << " labeled windows at W="
            << spec.labeling.window_length << ")\n";
  for (Category c : kAllCategories) {
    if (const auto& b = data.bayes_accuracy[index_of(c)]) std::cout << "  " << name(c) << " bayes " << *b << '\n';
  }
  return 0;
}

int run_windows(const ExperimentConfig& c, fs::path out) {
  if (c.input.empty()) throw Error(ErrorKind::InvalidConfig, "windows needs --input");
  const WindowDataset data = build_window_dataset(load_dataset(c.input), c.labeling, c.pooled_thresholds);
  if (out.empty()) out = output_dir(c) / "windows.jsonl";
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_window_dataset(out, data);
  std::cout << "wrote " << data.windows.size() << " windows to " << out.string() << '\n';
  return 0;
}

int run_train(const ExperimentConfig& c, fs::path out) {
  const WindowDataset data = obtain_windows(c);
  std::vector<FoldModel> models;
  const EvalReport report = loocv(data, c.loocv_options(), {}, &models);
  if (out.empty()) out = output_dir(c) / "models.json";
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_fold_models(out, models, config_hash(c));
  std::cout << "wrote " << models.size() << " fold models to " << out.string() << '\n';
  return 0;
}

int run_evaluate(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const WindowDataset data = obtain_windows(c);
  const double t_windows = seconds_since(t0);
  std::map<std::string, FoldModel> models;
  if (!c.models.empty()) models = load_fold_models(c.models, config_hash(c));
  EvalReport report = loocv(data, c.loocv_options(), models);
  const double t_loocv = seconds_since(t0) - t_windows;
  const fs::path dir = output_dir(c);
  write_report(dir, report, c);
  nlohmann::ordered_json timing;
  timing["windows_seconds"] = t_windows;
  timing["loocv_seconds"] = t_loocv;
  timing["total_seconds"] = seconds_since(t0);
  timing["threads"] = c.threads;
  std::ofstream(dir / "timing.json") << timing.dump(2) << '\n';
  std::cout << summary_text(report, c);
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<nlohmann::json> reports;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "report.json";
    try {
      reports.push_back(nlohmann::json::parse(read_file(p)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::MalformedRow, p.string() + ": " + e.what());
    }
  }
  const std::string table = comparison_table(reports);
  if (out.empty()) {
    std::cout << table;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + out);
    f << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention level estimation from facial feature fusion"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with known Bayes accuracy");
  SynthSpec spec = default_synth_spec();
  std::string synth_out, synth_cats;
  std::uint64_t synth_seed = 0;
  std::optional<double> target;
  double volatility = 0.0;
  synth->add_option("--out", synth_out, "dataset directory")->required();
  synth->add_option("--users", spec.n_users, "number of users");
  synth->add_option("--min-seconds", spec.min_seconds, "shortest session");
  synth->add_option("--max-seconds", spec.max_seconds, "longest session");
  synth->add_option("--frame-rate", spec.frame_rate, "frames per second");
  synth->add_option("--window", spec.labeling.window_length, "window length used for the Bayes oracle");
  synth->add_option("--missing-rate", spec.missing_second_rate, "probability that a second has no frames");
  synth->add_option("--target-bayes", target, "calibrate every channel's gain to this window-mean Bayes accuracy");
  synth->add_option("--volatility", volatility, "attention coupling of the noise scale");
  synth->add_option("--categories", synth_cats, "categories to generate (default all)");
  synth->add_option("--seed", synth_seed, "generator seed");

  auto* windows = app.add_subcommand("windows", "extract and label windows, writing the window dump");
  ExperimentFlags windows_flags;
  windows_flags.add(windows);
  std::string windows_out;
  windows->add_option("--out", windows_out, "dump path (default <output>/windows.jsonl)");

  auto* train = app.add_subcommand("train", "train every leave-one-user-out fold model");
  ExperimentFlags train_flags;
  train_flags.add(train);
  std::string train_out;
  train->add_option("--out", train_out, "model file (default <output>/models.json)");

  auto* evaluate = app.add_subcommand("evaluate", "run leave-one-user-out evaluation and write the report");
  ExperimentFlags eval_flags;
  eval_flags.add(evaluate);
  std::string models_in;
  evaluate->add_option("--models", models_in, "fold models from train instead of training");

  auto* report = app.add_subcommand("report", "compare report.json files across configurations");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("reports", report_inputs, "report.json files or directories containing one")->required();
  report->add_option("--out", report_out, "write the table here instead of stdout");

  std::string stage = "cli";
  try {
    app.parse(argc, argv);
    if (synth->parsed()) {
      stage = "synth";
      return run_synth(synth_out, spec, synth_seed, target, synth_cats, volatility);
    }
    if (windows->parsed()) {
      stage = "windows";
      return run_windows(windows_flags.resolve(), windows_out);
    }
    if (train->parsed()) {
      stage = "train";
      return run_train(train_flags.resolve(), train_out);
    }
    if (evaluate->parsed()) {
      stage = "evaluate";
      ExperimentConfig c = eval_flags.resolve();
      if (!models_in.empty()) c.models = models_in;
      return run_evaluate(c);
    }
    stage = "report";
    return run_report(report_inputs, report_out);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const Error& e) {
    std::cerr << "attnfuse " << stage << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "attnfuse " << stage << ": " << e.what() << '\n';
    return 2;
  }
}
