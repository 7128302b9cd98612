#include "sea/evaluation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sea/errors.hpp"
#include "sea/rng.hpp"

namespace sea {

namespace {

void check_prediction_lengths(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (truth.empty()) {
    throw ValidationError("accuracy is undefined for an empty label set");
  }
  if (predicted.size() != truth.size()) {
    throw DimensionError("predictions and labels differ in length");
  }
}

}  // namespace

std::vector<std::uint32_t> predict(const LinearModel& model, const RowMatrix& features) {
  if (static_cast<std::size_t>(features.cols()) != model.dim()) {
    throw DimensionError("features have dimension " + std::to_string(features.cols()) + ", model expects " +
                         std::to_string(model.dim()));
  }
  const RowMatrix scores = features * model.weights;
  std::vector<std::uint32_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

std::vector<std::uint32_t> predict(const LinearModel& model, const FeatureMatrix& features) {
  return predict(model, to_row_matrix(features));
}

double top1_accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  check_prediction_lengths(predicted, truth);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double mean_per_class_accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  check_prediction_lengths(predicted, truth);
  const std::uint32_t classes = *std::max_element(truth.begin(), truth.end()) + 1;
  std::vector<std::size_t> correct(classes, 0);
  std::vector<std::size_t> total(classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++total[truth[i]];
    if (predicted[i] == truth[i]) ++correct[truth[i]];
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::uint32_t c = 0; c < classes; ++c) {
    if (total[c] == 0) continue;
    sum += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    ++present;
  }
  return sum / static_cast<double>(present);
}

Metrics compute_metrics(std::span<const std::uint32_t> predicted, const LabelVector& truth) {
  const auto labels = truth.labels();
  Metrics m;
  m.top1 = top1_accuracy(predicted, labels);
  m.mean_per_class = mean_per_class_accuracy(predicted, labels);
  m.correct.assign(truth.num_classes(), 0);
  m.total.assign(truth.num_classes(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++m.total[labels[i]];
    if (predicted[i] == labels[i]) ++m.correct[labels[i]];
  }
  return m;
}

std::string_view to_string(MetricKind kind) noexcept {
  return kind == MetricKind::top1 ? "top1" : "mean_per_class";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "top1") return MetricKind::top1;
  if (name == "mean_per_class") return MetricKind::mean_per_class;
  throw ParameterError("unknown metric '" + std::string(name) + "' (expected top1 or mean_per_class)");
}

double metric_value(MetricKind kind, std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  return kind == MetricKind::top1 ? top1_accuracy(predicted, truth) : mean_per_class_accuracy(predicted, truth);
}

std::size_t GridSpec::size() const noexcept {
  return lr.size() * weight_decay.size() * alpha.size() * lambda.size() * delta.size() * eta.size();
}

void GridSpec::validate() const {
  const std::pair<const char*, const std::vector<double>*> lists[] = {
      {"lr", &lr}, {"weight_decay", &weight_decay}, {"alpha", &alpha},
      {"lambda", &lambda}, {"delta", &delta}, {"eta", &eta}};
  for (const auto& [name, values] : lists) {
    if (values->empty()) {
      throw ParameterError(std::string("grid list '") + name + "' is empty");
    }
  }
}

GridSpec GridSpec::paper_defaults() {
  GridSpec g;
  g.lr = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  g.weight_decay = {0.0, 1e-6, 1e-5, 1e-4};
  g.alpha = {0.01, 0.02, 0.05};
  g.lambda = {0.05, 0.1, 1.0};
  g.delta = {0.0, 1.0};
  g.eta = {0.0, 0.2, 0.4, 0.8};
  return g;
}

std::vector<GridPoint> enumerate_grid(const GridSpec& grid) {
  grid.validate();
  std::vector<GridPoint> points;
  points.reserve(grid.size());
  for (double lr : grid.lr)
    for (double wd : grid.weight_decay)
      for (double alpha : grid.alpha)
        for (double lambda : grid.lambda)
          for (double delta : grid.delta)
            for (double eta : grid.eta) points.push_back({lr, wd, alpha, lambda, delta, eta});
  return points;
}

TrainConfig config_for_point(const TrainConfig& base, const GridPoint& point, std::size_t index) {
  TrainConfig config = base;
  config.lr = point.lr;
  config.weight_decay = point.weight_decay;
  config.aug.alpha = point.alpha;
  config.loss.lambda = point.lambda;
  config.loss.delta = point.delta;
  config.aug.eta = point.eta;
  config.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(index)});
  config.threads = 1;
  return config;
}

GridResult grid_search(const Dataset& train_set, const Dataset& validation, const GridSpec& grid,
                       const TrainConfig& base, const GridOptions& options) {
  const auto points = enumerate_grid(grid);
  for (std::size_t k = 0; k < points.size(); ++k) config_for_point(base, points[k], k).validate();
  if (validation.features.cols() != train_set.features.cols()) {
    throw DimensionError("validation and training features differ in dimension");
  }

  GridResult result;
  result.table.resize(points.size());
  std::vector<bool> done(points.size(), false);
  for (const auto& row : options.completed) {
    if (row.index >= points.size() || !(row.point == points[row.index])) {
      throw ValidationError("completed grid row " + std::to_string(row.index) + " does not match this grid");
    }
    result.table[row.index] = row;
    done[row.index] = true;
  }

  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!done[k]) pending.push_back(k);
  }

  // Best model trained in this call, ordered by (metric desc, index asc).
  std::optional<std::size_t> best_trained;
  LinearModel best_trained_model;
  std::mutex guard;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= pending.size()) return;
      const std::size_t k = pending[slot];
      const TrainConfig config = config_for_point(base, points[k], k);
      GridRow row{k, points[k], -1.0, 0.0, false};
      std::optional<LinearModel> model;
      const auto start = std::chrono::steady_clock::now();
      try {
        auto trained = train(train_set, config);
        row.metric = metric_value(grid.metric, predict(trained.model, validation.features), validation.labels.labels());
        model = std::move(trained.model);
      } catch (const DivergenceError& e) {
        row.diverged = true;
        spdlog::warn("grid point {} diverged: {}", k, e.what());
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      std::lock_guard lock(guard);
      result.table[k] = row;
      ++result.points_trained;
      if (model && (!best_trained || row.metric > result.table[*best_trained].metric ||
                    (row.metric == result.table[*best_trained].metric && k < *best_trained))) {
        best_trained = k;
        best_trained_model = std::move(*model);
      }
      if (options.on_point_done) options.on_point_done(row);
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, pending.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::optional<std::size_t> best;
  for (const auto& row : result.table) {
    if (row.diverged) continue;
    if (!best || row.metric > result.table[*best].metric) best = row.index;
  }
  if (!best) {
    throw DivergenceError(0, 0, "every grid point diverged");
  }
  result.best_index = *best;
  result.best_config = config_for_point(base, points[*best], *best);
  if (best_trained && *best_trained == *best) {
    result.best_model = std::move(best_trained_model);
  } else {
    result.best_model = train(train_set, result.best_config).model;
  }
  if (options.refit_on_train_and_val) {
    result.best_model = train(append_examples(train_set, validation), result.best_config).model;
  }
  return result;
}

std::string grid_table_csv(const std::vector<GridRow>& table) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "index,lr,weight_decay,alpha,lambda,delta,eta,val_metric,train_seconds,diverged\n";
  for (const auto& row : table) {
    const auto& p = row.point;
    out << row.index << ',' << p.lr << ',' << p.weight_decay << ',' << p.alpha << ',' << p.lambda << ',' << p.delta
        << ',' << p.eta << ',' << row.metric << ',' << row.seconds << ',' << (row.diverged ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string grid_table_json(const std::vector<GridRow>& table, std::size_t best_index) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table) {
    const auto& p = row.point;
    rows.push_back({{"index", row.index},
                    {"lr", p.lr},
                    {"weight_decay", p.weight_decay},
                    {"alpha", p.alpha},
                    {"lambda", p.lambda},
                    {"delta", p.delta},
                    {"eta", p.eta},
                    {"val_metric", row.metric},
                    {"train_seconds", row.seconds},
                    {"diverged", row.diverged}});
  }
  return nlohmann::json{{"best_index", best_index}, {"points", rows}}.dump(2);
}

SplitIndices stratified_split(const LabelVector& labels, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    throw ParameterError("validation fraction must lie in [0, 1]");
  }
  std::vector<std::vector<std::size_t>> by_class(labels.num_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  SplitIndices split;
  for (std::uint32_t c = 0; c < labels.num_classes(); ++c) {
    auto& members = by_class[c];
    Rng(derive_seed(seed, {c})).shuffle(std::span(members));
    const auto take = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(members.size())));
    split.validation.insert(split.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

void SyntheticSpec::validate() const {
  if (dim < 2) throw ParameterError("synthetic data needs dim >= 2");
  if (classes < 1) throw ParameterError("synthetic data needs at least one class");
  if (n < classes) throw ParameterError("synthetic data needs n >= classes");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw ParameterError("separation must be nonnegative");
  if (!(shared_offset >= 0.0) || !std::isfinite(shared_offset)) throw ParameterError("shared offset must be nonnegative");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ParameterError("label noise must lie in [0, 1]");
  if (classes > UINT32_MAX) throw ParameterError("too many classes");
}

namespace {

constexpr std::uint64_t kCenterStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;
constexpr std::uint64_t kFlipStream = 4;
constexpr std::uint64_t kSharedStream = 5;

void random_unit(Rng& rng, double* v, std::size_t dim) {
  double sq = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    v[j] = rng.normal();
    sq += v[j] * v[j];
  }
  const double norm = std::sqrt(sq);
  for (std::size_t j = 0; j < dim; ++j) v[j] /= norm;
}

// Class centers with the shared offset folded in.
std::vector<double> class_centers(const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.seed, {kCenterStream}));
  std::vector<double> centers(spec.classes * spec.dim);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    double* center = centers.data() + c * spec.dim;
    random_unit(rng, center, spec.dim);
    for (std::size_t j = 0; j < spec.dim; ++j) center[j] *= spec.separation;
  }
  if (spec.shared_offset > 0.0) {
    Rng shared_rng(derive_seed(spec.seed, {kSharedStream}));
    std::vector<double> shared(spec.dim);
    random_unit(shared_rng, shared.data(), spec.dim);
    for (std::size_t k = 0; k < centers.size(); ++k) centers[k] += spec.shared_offset * shared[k % spec.dim];
  }
  return centers;
}

Dataset sample_blobs(const SyntheticSpec& spec, const std::vector<double>& centers, std::size_t n,
                     std::uint64_t stream, double label_noise) {
  Rng rng(derive_seed(spec.seed, {stream}));
  Rng flips(derive_seed(spec.seed, {kFlipStream, stream}));
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(spec.dim));
  std::vector<float> values(n * spec.dim);
  std::vector<std::uint32_t> labels(n);
  std::vector<double> x(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % spec.classes;
    const double* center = centers.data() + c * spec.dim;
    double sq = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      x[j] = center[j] + noise_scale * rng.normal();
      sq += x[j] * x[j];
    }
    const double norm = std::sqrt(sq);
    for (std::size_t j = 0; j < spec.dim; ++j) values[i * spec.dim + j] = static_cast<float>(x[j] / norm);

    auto label = static_cast<std::uint32_t>(c);
    if (spec.classes > 1 && flips.uniform() < label_noise) {
      auto other = static_cast<std::uint32_t>(flips.bounded(spec.classes - 1));
      label = other >= label ? other + 1 : other;
    }
    labels[i] = label;
  }
  auto features = l2_normalize_rows(FeatureMatrix(n, spec.dim, std::move(values))).matrix;
  return Dataset(std::move(features), LabelVector(static_cast<std::uint32_t>(spec.classes), std::move(labels)));
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  return sample_blobs(spec, class_centers(spec), spec.n, kTrainStream, spec.label_noise);
}

SyntheticSplit generate_synthetic_split(const SyntheticSpec& spec, std::size_t test_n) {
  spec.validate();
  if (test_n == 0) throw ParameterError("test split needs at least one example");
  const auto centers = class_centers(spec);
  return {sample_blobs(spec, centers, spec.n, kTrainStream, spec.label_noise),
          sample_blobs(spec, centers, test_n, kTestStream, 0.0)};
}

}  // namespace sea
