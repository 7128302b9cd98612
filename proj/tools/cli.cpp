#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sea/errors.hpp"
#include "sea/evaluation.hpp"
#include "sea/feature_store.hpp"
#include "sea/trainer.hpp"

namespace sea::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kCheckpointFile = "model.seaw";
constexpr const char* kReportLogFile = "report.log";
constexpr const char* kReportJsonFile = "report.json";
constexpr const char* kPointsFile = "points.jsonl";
constexpr const char* kGridCsvFile = "grid.csv";
constexpr const char* kGridJsonFile = "grid.json";
constexpr const char* kBestModelFile = "best_model.seaw";

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomically(path, std::as_bytes(std::span(text.data(), text.size())));
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(path.string() + ": cannot open for reading");
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

json config_to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"lambda", c.loss.lambda},
          {"delta", c.loss.delta},
          {"aug", std::string(to_string(c.aug.mode))},
          {"eta", c.aug.eta},
          {"alpha", c.aug.alpha},
          {"renormalize", c.aug.renormalize},
          {"threads", c.threads}};
}

TrainConfig config_from_json(const json& j) {
  try {
    TrainConfig c;
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.loss.lambda = j.at("lambda").get<double>();
    c.loss.delta = j.at("delta").get<double>();
    c.aug.mode = parse_aug_mode(j.at("aug").get<std::string>());
    c.aug.eta = j.at("eta").get<double>();
    c.aug.alpha = j.at("alpha").get<double>();
    c.aug.renormalize = j.at("renormalize").get<bool>();
    c.threads = j.value("threads", std::size_t{1});
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest config is incomplete: ") + e.what());
  }
}

json formats_json() {
  return {{"features", kFeatureFormatVersion}, {"labels", kLabelFormatVersion}, {"checkpoint", kCheckpointFormatVersion}};
}

json grid_to_json(const GridSpec& g) {
  return {{"lr", g.lr},       {"weight_decay", g.weight_decay}, {"alpha", g.alpha}, {"lambda", g.lambda},
          {"delta", g.delta}, {"eta", g.eta},                   {"metric", std::string(to_string(g.metric))}};
}

GridSpec grid_from_json(const json& j) {
  try {
    GridSpec g;
    g.lr = j.at("lr").get<std::vector<double>>();
    g.weight_decay = j.at("weight_decay").get<std::vector<double>>();
    g.alpha = j.at("alpha").get<std::vector<double>>();
    g.lambda = j.at("lambda").get<std::vector<double>>();
    g.delta = j.at("delta").get<std::vector<double>>();
    g.eta = j.at("eta").get<std::vector<double>>();
    g.metric = parse_metric(j.at("metric").get<std::string>());
    return g;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest grid is incomplete: ") + e.what());
  }
}

json row_to_json(const GridRow& row) {
  const auto& p = row.point;
  return {{"index", row.index}, {"lr", p.lr},       {"weight_decay", p.weight_decay},
          {"alpha", p.alpha},   {"lambda", p.lambda}, {"delta", p.delta},
          {"eta", p.eta},       {"val_metric", row.metric}, {"train_seconds", row.seconds},
          {"diverged", row.diverged}};
}

GridRow row_from_json(const json& j) {
  GridRow row;
  row.index = j.at("index").get<std::size_t>();
  row.point = {j.at("lr").get<double>(),     j.at("weight_decay").get<double>(), j.at("alpha").get<double>(),
               j.at("lambda").get<double>(), j.at("delta").get<double>(),        j.at("eta").get<double>()};
  row.metric = j.at("val_metric").get<double>();
  row.seconds = j.at("train_seconds").get<double>();
  row.diverged = j.at("diverged").get<bool>();
  return row;
}

// Completed rows recorded by an earlier run. A torn final line (from an
// interrupted write) is ignored.
std::vector<GridRow> read_completed_rows(const fs::path& path) {
  std::vector<GridRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(row_from_json(json::parse(line)));
    } catch (const json::exception&) {
      spdlog::warn("{}: skipping unreadable line", path.string());
    }
  }
  return rows;
}

Dataset load_dataset(const std::string& features_path, const std::string& labels_path, bool normalize) {
  auto features = read_feature_file(features_path);
  auto labels = read_label_file(labels_path);
  if (normalize && !features.normalized()) {
    features = l2_normalize_rows(features).matrix;
  }
  return Dataset(std::move(features), std::move(labels));
}

// Flags shared by `train` and `grid`.
struct DataFlags {
  std::string features;
  std::string labels;
  std::string val_features;
  std::string val_labels;
  bool normalize = false;
};

void add_data_flags(CLI::App& cmd, DataFlags& flags) {
  cmd.add_option("--features", flags.features, "Training features (SEAF file)")->required()->check(CLI::ExistingFile);
  cmd.add_option("--labels", flags.labels, "Training labels (SEAL file)")->required()->check(CLI::ExistingFile);
  cmd.add_option("--val-features", flags.val_features, "Validation features (SEAF file)")->check(CLI::ExistingFile);
  cmd.add_option("--val-labels", flags.val_labels, "Validation labels (SEAL file)")->check(CLI::ExistingFile);
  cmd.add_flag("--normalize", flags.normalize, "Row-normalize features that are not unit length")
      ->capture_default_str();
}

struct SharedTrainFlags {
  std::string aug = "sea";
  TrainConfig config;
};

void add_shared_train_flags(CLI::App& cmd, SharedTrainFlags& flags) {
  cmd.add_option("--aug", flags.aug, "Augmentation direction: none, sea, adv, sea_neg, rand, mixup")
      ->capture_default_str();
  cmd.add_option("--momentum", flags.config.momentum, "SGD momentum")->capture_default_str();
  cmd.add_option("--batch-size", flags.config.batch_size, "Mini-batch size")->capture_default_str();
  cmd.add_option("--epochs", flags.config.epochs, "Training epochs")->capture_default_str();
  cmd.add_option("--seed", flags.config.seed, "Seed for every random choice")->capture_default_str();
  cmd.add_flag("--no-renormalize{false}", flags.config.aug.renormalize,
               "Skip rescaling augmented features to unit length");
}

// ---------------------------------------------------------------------------
// concat

int cmd_concat(const std::vector<std::string>& inputs, const std::string& output, std::ostream& out) {
  std::vector<FeatureMatrix> parts;
  parts.reserve(inputs.size());
  for (const auto& path : inputs) parts.push_back(read_feature_file(path));
  const auto combined = concat_features(parts);
  write_feature_file(combined, output);
  out << "wrote " << output << ": n=" << combined.rows() << " d=" << combined.cols() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainFlags {
  DataFlags data;
  SharedTrainFlags shared;
  std::string out_dir = "sea_run";
  std::string from_manifest;
};

int cmd_train(TrainFlags flags, std::ostream& out) {
  TrainConfig config = flags.shared.config;
  if (!flags.from_manifest.empty()) {
    const json manifest = read_json(flags.from_manifest);
    config = config_from_json(manifest.at("config"));
    const auto& inputs = manifest.at("inputs");
    flags.data.features = inputs.at("features").get<std::string>();
    flags.data.labels = inputs.at("labels").get<std::string>();
    flags.data.val_features = inputs.value("val_features", "");
    flags.data.val_labels = inputs.value("val_labels", "");
    flags.data.normalize = inputs.value("normalize", false);
  } else {
    config.aug.mode = parse_aug_mode(flags.shared.aug);
  }
  config.validate();
  if (flags.data.val_features.empty() != flags.data.val_labels.empty()) {
    throw ValidationError("--val-features and --val-labels must be given together");
  }

  const Dataset data = load_dataset(flags.data.features, flags.data.labels, flags.data.normalize);
  std::optional<Dataset> validation;
  if (!flags.data.val_features.empty()) {
    validation.emplace(load_dataset(flags.data.val_features, flags.data.val_labels, flags.data.normalize));
  }

  const auto result = train(data, config, validation ? &*validation : nullptr);

  const fs::path dir = flags.out_dir;
  fs::create_directories(dir);
  write_checkpoint(result.model, dir / kCheckpointFile);
  write_text(dir / kReportLogFile, format_report_log(result.report));
  write_text(dir / kReportJsonFile, report_to_json(result.report));
  json inputs = {{"features", flags.data.features}, {"labels", flags.data.labels}, {"normalize", flags.data.normalize}};
  if (validation) {
    inputs["val_features"] = flags.data.val_features;
    inputs["val_labels"] = flags.data.val_labels;
  }
  const json manifest = {{"tool", "sea"},
                         {"tool_version", std::string(kToolVersion)},
                         {"command", "train"},
                         {"formats", formats_json()},
                         {"inputs", inputs},
                         {"config", config_to_json(config)},
                         {"outputs",
                          {{"checkpoint", kCheckpointFile},
                           {"report_log", kReportLogFile},
                           {"report_json", kReportJsonFile}}}};
  write_text(dir / kManifestFile, manifest.dump(2));

  out << std::fixed << std::setprecision(4);
  if (!result.report.train_loss.empty()) {
    out << "final train_loss " << result.report.train_loss.back() << " train_acc "
        << result.report.train_accuracy.back();
    if (!result.report.val_accuracy.empty()) out << " val_acc " << result.report.val_accuracy.back();
    out << "\n";
  }
  out << "wrote " << (dir / kCheckpointFile).string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& model_path, const std::string& features_path, const std::string& labels_path,
             const std::string& metric_name, std::ostream& out) {
  const MetricKind metric = parse_metric(metric_name);
  const LinearModel model = read_checkpoint(model_path);
  const Dataset data = load_dataset(features_path, labels_path, false);
  if (data.labels.num_classes() != model.classes()) {
    throw DimensionError("labels declare " + std::to_string(data.labels.num_classes()) + " classes, model has " +
                         std::to_string(model.classes()));
  }
  const auto predicted = predict(model, data.features);
  out << std::fixed << std::setprecision(4) << metric_value(metric, predicted, data.labels.labels()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// grid

struct GridFlags {
  DataFlags data;
  SharedTrainFlags shared;
  bool paper_grid = false;
  std::vector<double> lr;
  std::vector<double> weight_decay;
  std::vector<double> alpha;
  std::vector<double> lambda;
  std::vector<double> delta;
  std::vector<double> eta;
  std::string metric = "top1";
  double val_fraction = 0.2;
  std::size_t workers = 1;
  bool refit = false;
  bool dry_run = false;
  std::string out_dir = "sea_grid";
  std::string resume;
};

int run_grid(const fs::path& dir, const json& manifest, std::vector<GridRow> completed, std::ostream& out) {
  const auto& inputs = manifest.at("inputs");
  const TrainConfig base = config_from_json(manifest.at("config"));
  const GridSpec grid = grid_from_json(manifest.at("grid"));
  const auto& options_json = manifest.at("options");
  const bool normalize = inputs.value("normalize", false);

  const Dataset all = load_dataset(inputs.at("features").get<std::string>(), inputs.at("labels").get<std::string>(),
                                   normalize);
  std::optional<Dataset> train_set;
  std::optional<Dataset> validation;
  if (inputs.contains("val_features")) {
    train_set.emplace(all);
    validation.emplace(load_dataset(inputs.at("val_features").get<std::string>(),
                                    inputs.at("val_labels").get<std::string>(), normalize));
  } else {
    const auto split = stratified_split(all.labels, options_json.at("val_fraction").get<double>(), base.seed);
    if (split.train.empty() || split.validation.empty()) {
      throw ValidationError("stratified split left an empty train or validation set");
    }
    train_set.emplace(select_examples(all, split.train));
    validation.emplace(select_examples(all, split.validation));
  }

  GridOptions options;
  options.workers = options_json.at("workers").get<std::size_t>();
  options.refit_on_train_and_val = options_json.at("refit").get<bool>();
  options.completed = std::move(completed);
  const std::size_t reused = options.completed.size();
  std::ofstream points(dir / kPointsFile, std::ios::app);
  options.on_point_done = [&points](const GridRow& row) {
    points << row_to_json(row).dump() << "\n";
    points.flush();
  };

  const auto result = grid_search(*train_set, *validation, grid, base, options);

  write_text(dir / kGridCsvFile, grid_table_csv(result.table));
  write_text(dir / kGridJsonFile, grid_table_json(result.table, result.best_index));
  write_checkpoint(result.best_model, dir / kBestModelFile);

  json final_manifest = manifest;
  final_manifest["result"] = {{"best_index", result.best_index},
                              {"best_config", config_to_json(result.best_config)},
                              {"best_val_metric", result.table[result.best_index].metric},
                              {"points_total", result.table.size()},
                              {"points_trained", result.points_trained},
                              {"points_reused", reused}};
  write_text(dir / kManifestFile, final_manifest.dump(2));

  const auto& best = result.table[result.best_index];
  out << "grid: " << result.table.size() << " point(s), trained " << result.points_trained << ", reused " << reused
      << "\n";
  out << std::setprecision(6) << "best point " << best.index << ": lr=" << best.point.lr
      << " weight_decay=" << best.point.weight_decay << " alpha=" << best.point.alpha
      << " lambda=" << best.point.lambda << " delta=" << best.point.delta << " eta=" << best.point.eta << " "
      << to_string(grid.metric) << "=" << std::fixed << std::setprecision(4) << best.metric << "\n";
  return kExitOk;
}

int cmd_grid(const GridFlags& flags, const CLI::App& cmd, std::ostream& out) {
  if (!flags.resume.empty()) {
    const fs::path dir = flags.resume;
    const json manifest = read_json(dir / kManifestFile);
    if (manifest.value("command", "") != "grid") {
      throw ValidationError((dir / kManifestFile).string() + " is not a grid manifest");
    }
    auto completed = read_completed_rows(dir / kPointsFile);
    // Rewrite the progress file without any torn line before appending.
    std::string text;
    for (const auto& row : completed) text += row_to_json(row).dump() + "\n";
    write_text(dir / kPointsFile, text);
    return run_grid(dir, manifest, std::move(completed), out);
  }

  TrainConfig base = flags.shared.config;
  base.aug.mode = parse_aug_mode(flags.shared.aug);
  GridSpec grid = flags.paper_grid ? GridSpec::paper_defaults() : GridSpec{};
  grid.metric = parse_metric(flags.metric);
  const auto override_list = [&cmd](const char* name, const std::vector<double>& given, std::vector<double>& target) {
    if (cmd.count(name) > 0) target = given;
  };
  override_list("--lr", flags.lr, grid.lr);
  override_list("--weight-decay", flags.weight_decay, grid.weight_decay);
  override_list("--alpha", flags.alpha, grid.alpha);
  override_list("--lambda", flags.lambda, grid.lambda);
  override_list("--delta", flags.delta, grid.delta);
  override_list("--eta", flags.eta, grid.eta);
  grid.validate();
  const auto points = enumerate_grid(grid);
  for (const auto& point : points) config_for_point(base, point, 0).validate();
  if (flags.dry_run) {
    out << "grid: " << points.size() << " point(s)\n";
    return kExitOk;
  }
  if (flags.data.val_features.empty() != flags.data.val_labels.empty()) {
    throw ValidationError("--val-features and --val-labels must be given together");
  }
  if (flags.workers == 0) {
    throw ParameterError("--workers must be at least 1");
  }

  json inputs = {{"features", flags.data.features}, {"labels", flags.data.labels}, {"normalize", flags.data.normalize}};
  if (!flags.data.val_features.empty()) {
    inputs["val_features"] = flags.data.val_features;
    inputs["val_labels"] = flags.data.val_labels;
  }
  const json manifest = {
      {"tool", "sea"},
      {"tool_version", std::string(kToolVersion)},
      {"command", "grid"},
      {"formats", formats_json()},
      {"inputs", inputs},
      {"config", config_to_json(base)},
      {"grid", grid_to_json(grid)},
      {"options", {{"workers", flags.workers}, {"refit", flags.refit}, {"val_fraction", flags.val_fraction}}},
      {"outputs",
       {{"progress", kPointsFile}, {"csv", kGridCsvFile}, {"json", kGridJsonFile}, {"best_model", kBestModelFile}}}};

  // Load inputs once up front so bad files fail before anything is written.
  load_dataset(flags.data.features, flags.data.labels, flags.data.normalize);

  const fs::path dir = flags.out_dir;
  fs::create_directories(dir);
  write_text(dir / kManifestFile, manifest.dump(2));
  write_text(dir / kPointsFile, "");
  return run_grid(dir, manifest, {}, out);
}

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
  SyntheticSpec spec;
  std::string out_features;
  std::string out_labels;
  std::size_t test_n = 0;
  std::string out_test_features;
  std::string out_test_labels;
};

int cmd_synth(const SynthFlags& flags, std::ostream& out) {
  flags.spec.validate();
  if (flags.test_n > 0) {
    if (flags.out_test_features.empty() || flags.out_test_labels.empty()) {
      throw ValidationError("--test-n needs --out-test-features and --out-test-labels");
    }
    const auto split = generate_synthetic_split(flags.spec, flags.test_n);
    write_feature_file(split.train.features, flags.out_features);
    write_label_file(split.train.labels, flags.out_labels);
    write_feature_file(split.test.features, flags.out_test_features);
    write_label_file(split.test.labels, flags.out_test_labels);
  } else {
    const auto data = generate_synthetic(flags.spec);
    write_feature_file(data.features, flags.out_features);
    write_label_file(data.labels, flags.out_labels);
  }
  out << "wrote " << flags.out_features << " and " << flags.out_labels << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// import-csv

struct ImportFlags {
  std::string csv;
  std::string out_features;
  std::string out_labels;
  bool labels_last = false;
  std::uint32_t num_classes = 0;
};

int cmd_import_csv(const ImportFlags& flags, std::ostream& out) {
  if (flags.labels_last && flags.out_labels.empty()) {
    throw ValidationError("--labels-last-column needs --out-labels");
  }
  auto imported = import_csv(flags.csv, flags.labels_last);
  std::optional<LabelVector> labels;
  if (flags.labels_last) {
    std::uint32_t classes = flags.num_classes;
    if (classes == 0) {
      for (auto l : imported.labels) classes = std::max(classes, l + 1);
    }
    labels.emplace(classes, std::move(imported.labels));
  }
  write_feature_file(imported.features, flags.out_features);
  if (labels) write_label_file(*labels, flags.out_labels);
  out << "wrote " << flags.out_features << ": n=" << imported.features.rows() << " d=" << imported.features.cols()
      << "\n";
  return kExitOk;
}

}  // namespace

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = std::make_shared<spdlog::logger>("sea", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    spdlog::set_default_logger(logger);
  });
  const char* level = std::getenv("SEA_LOG_LEVEL");
  const std::string name = level != nullptr ? level : "info";
  if (name == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (name == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear classifiers on fixed features with semantic adversarial augmentation", "sea"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::vector<std::string> concat_inputs;
  std::string concat_output;
  auto* concat = app.add_subcommand("concat", "Normalize and concatenate feature files from several models");
  concat->add_option("inputs", concat_inputs, "Input feature files, in column order")->required()->check(CLI::ExistingFile);
  concat->add_option("-o,--output", concat_output, "Output feature file")->required();

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a linear classifier with SGD");
  add_data_flags(*train_cmd, train_flags.data);
  add_shared_train_flags(*train_cmd, train_flags.shared);
  auto& tc = train_flags.shared.config;
  train_cmd->add_option("--lr", tc.lr, "Constant learning rate")->capture_default_str();
  train_cmd->add_option("--weight-decay", tc.weight_decay, "L2 regularization weight tau")->capture_default_str();
  train_cmd->add_option("--lambda", tc.loss.lambda, "Smoothing coefficient of the hinge loss")->capture_default_str();
  train_cmd->add_option("--delta", tc.loss.delta, "Hinge margin")->capture_default_str();
  train_cmd->add_option("--eta", tc.aug.eta, "Augmentation step size")->capture_default_str();
  train_cmd->add_option("--alpha", tc.aug.alpha, "Entropy weight of the projection (0 = hard argmax)")
      ->capture_default_str();
  train_cmd->add_option("--threads", tc.threads, "Workers per batch")->capture_default_str();
  train_cmd->add_option("--out", train_flags.out_dir, "Run directory for checkpoint, report and manifest")
      ->capture_default_str();
  train_cmd->add_option("--from-manifest", train_flags.from_manifest,
                        "Rerun with the configuration and inputs recorded in a manifest")
      ->check(CLI::ExistingFile);
  // A manifest supplies the data flags.
  train_cmd->get_option("--features")->required(false);
  train_cmd->get_option("--labels")->required(false);

  std::string eval_model;
  std::string eval_features;
  std::string eval_labels;
  std::string eval_metric = "top1";
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a labeled feature set");
  eval->add_option("--model", eval_model, "Checkpoint (SEAW file)")->required();
  eval->add_option("--features", eval_features, "Features (SEAF file)")->required();
  eval->add_option("--labels", eval_labels, "Labels (SEAL file)")->required();
  eval->add_option("--metric", eval_metric, "top1 or mean_per_class")->capture_default_str();

  GridFlags grid_flags;
  auto* grid = app.add_subcommand("grid", "Hyperparameter grid search on a validation split");
  add_data_flags(*grid, grid_flags.data);
  add_shared_train_flags(*grid, grid_flags.shared);
  grid->add_flag("--paper-grid", grid_flags.paper_grid,
                 "Start from lr {0.25..8}, weight decay {0,1e-6,1e-5,1e-4}, alpha {0.01,0.02,0.05}, "
                 "lambda {0.05,0.1,1}, delta {0,1}, eta {0,0.2,0.4,0.8}");
  grid->add_option("--lr", grid_flags.lr, "Learning rates [default: 1]")->delimiter(',');
  grid->add_option("--weight-decay", grid_flags.weight_decay, "Weight decays [default: 0]")->delimiter(',');
  grid->add_option("--alpha", grid_flags.alpha, "Entropy weights [default: 0.01]")->delimiter(',');
  grid->add_option("--lambda", grid_flags.lambda, "Smoothing coefficients [default: 0.1]")->delimiter(',');
  grid->add_option("--delta", grid_flags.delta, "Margins [default: 0]")->delimiter(',');
  grid->add_option("--eta", grid_flags.eta, "Augmentation steps [default: 0.4]")->delimiter(',');
  grid->add_option("--metric", grid_flags.metric, "Selection metric: top1 or mean_per_class")->capture_default_str();
  grid->add_option("--val-fraction", grid_flags.val_fraction,
                   "Stratified validation fraction when no validation files are given")
      ->capture_default_str();
  grid->add_option("--workers", grid_flags.workers, "Grid points trained concurrently")->capture_default_str();
  grid->add_flag("--refit", grid_flags.refit, "Retrain the winner on train + validation")->capture_default_str();
  grid->add_option("--out", grid_flags.out_dir, "Run directory")->capture_default_str();
  grid->add_flag("--dry-run", grid_flags.dry_run, "Print the number of grid points and exit");
  grid->add_option("--resume", grid_flags.resume, "Resume the interrupted run in this directory");
  grid->get_option("--features")->required(false);
  grid->get_option("--labels")->required(false);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-blob task");
  synth->add_option("--n", synth_flags.spec.n, "Training examples")->capture_default_str();
  synth->add_option("--dim", synth_flags.spec.dim, "Feature dimension")->capture_default_str();
  synth->add_option("--classes", synth_flags.spec.classes, "Number of classes")->capture_default_str();
  synth->add_option("--separation", synth_flags.spec.separation, "Class center scale")->capture_default_str();
  synth->add_option("--offset", synth_flags.spec.shared_offset, "Scale of a direction shared by all classes")
      ->capture_default_str();
  synth->add_option("--noise", synth_flags.spec.label_noise, "Label flip probability")->capture_default_str();
  synth->add_option("--seed", synth_flags.spec.seed, "Generator seed")->capture_default_str();
  synth->add_option("--out-features", synth_flags.out_features, "Output feature file")->required();
  synth->add_option("--out-labels", synth_flags.out_labels, "Output label file")->required();
  synth->add_option("--test-n", synth_flags.test_n, "Clean test examples from the same centers")
      ->capture_default_str();
  synth->add_option("--out-test-features", synth_flags.out_test_features, "Output test feature file");
  synth->add_option("--out-test-labels", synth_flags.out_test_labels, "Output test label file");

  ImportFlags import_flags;
  auto* import = app.add_subcommand("import-csv", "Convert a header-free CSV of floats to SEAF/SEAL");
  import->add_option("--csv", import_flags.csv, "Input CSV")->required();
  import->add_option("--out-features", import_flags.out_features, "Output feature file")->required();
  import->add_option("--out-labels", import_flags.out_labels, "Output label file");
  import->add_flag("--labels-last-column", import_flags.labels_last, "Last CSV column holds integer labels");
  import->add_option("--num-classes", import_flags.num_classes, "Declared class count (default: max label + 1)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (concat->parsed()) return cmd_concat(concat_inputs, concat_output, out);
    if (train_cmd->parsed()) {
      if (train_flags.from_manifest.empty() && (train_flags.data.features.empty() || train_flags.data.labels.empty())) {
        throw ValidationError("train needs --features and --labels (or --from-manifest)");
      }
      return cmd_train(train_flags, out);
    }
    if (eval->parsed()) return cmd_eval(eval_model, eval_features, eval_labels, eval_metric, out);
    if (grid->parsed()) {
      const bool needs_data = grid_flags.resume.empty() && !grid_flags.dry_run;
      if (needs_data && (grid_flags.data.features.empty() || grid_flags.data.labels.empty())) {
        throw ValidationError("grid needs --features and --labels (or --resume)");
      }
      return cmd_grid(grid_flags, *grid, out);
    }
    if (synth->parsed()) return cmd_synth(synth_flags, out);
    if (import->parsed()) return cmd_import_csv(import_flags, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const json::exception& e) {
    err << "error: malformed manifest: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitInternalError;
}

}  // namespace sea::cli
