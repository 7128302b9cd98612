#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sea/feature_store.hpp"
#include "sea/loss.hpp"
#include "sea/trainer.hpp"

namespace sea {

// Row-wise argmax of x.w_c, ties going to the lowest class index. The
// training margin delta plays no part in prediction.
std::vector<std::uint32_t> predict(const LinearModel& model, const FeatureMatrix& features);
std::vector<std::uint32_t> predict(const LinearModel& model, const RowMatrix& features);

double top1_accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

// Average of per-class recall over the classes present in `truth`.
double mean_per_class_accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

struct Metrics {
  double top1 = 0.0;
  double mean_per_class = 0.0;
  std::vector<std::size_t> correct;  // per class
  std::vector<std::size_t> total;    // per class; sums to n
};

Metrics compute_metrics(std::span<const std::uint32_t> predicted, const LabelVector& truth);

enum class MetricKind { top1, mean_per_class };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view name);
double metric_value(MetricKind kind, std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

// Candidate values per hyperparameter. Points are the Cartesian product with
// lr outermost, then weight_decay, alpha, lambda, delta, eta.
struct GridSpec {
  std::vector<double> lr{1.0};
  std::vector<double> weight_decay{0.0};
  std::vector<double> alpha{0.01};
  std::vector<double> lambda{0.1};
  std::vector<double> delta{0.0};
  std::vector<double> eta{0.4};
  MetricKind metric = MetricKind::top1;

  std::size_t size() const noexcept;
  void validate() const;

  // lr in {2^-2, ..., 2^3}, weight decay in {0, 1e-6, 1e-5, 1e-4},
  // alpha in {0.01, 0.02, 0.05}, lambda in {0.05, 0.1, 1}, delta in {0, 1},
  // eta in {0, 0.2, 0.4, 0.8}.
  static GridSpec paper_defaults();
};

struct GridPoint {
  double lr = 0.0;
  double weight_decay = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  double eta = 0.0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

std::vector<GridPoint> enumerate_grid(const GridSpec& grid);

// `base` with the point's hyperparameters and a seed derived from
// (base.seed, index).
TrainConfig config_for_point(const TrainConfig& base, const GridPoint& point, std::size_t index);

struct GridRow {
  std::size_t index = 0;
  GridPoint point;
  double metric = -1.0;  // -1 for diverged points
  double seconds = 0.0;
  bool diverged = false;
};

struct GridOptions {
  std::size_t workers = 1;
  // Retrain the winning configuration on train + validation.
  bool refit_on_train_and_val = false;
  // Rows finished by an earlier run; their points are not retrained.
  std::vector<GridRow> completed;
  // Called after each point finishes, serialized across workers.
  std::function<void(const GridRow&)> on_point_done;
};

struct GridResult {
  std::vector<GridRow> table;  // one row per point, in point order
  std::size_t best_index = 0;
  TrainConfig best_config;
  LinearModel best_model;
  std::size_t points_trained = 0;  // points trained by this call (excludes reused rows and refits)
};

/// Trains one model per grid point on `train`, scores it on `validation` with
/// the grid's metric, and returns the best point (ties to the lowest index).
/// Diverged points are recorded with metric -1 and never selected.
GridResult grid_search(const Dataset& train, const Dataset& validation, const GridSpec& grid,
                       const TrainConfig& base, const GridOptions& options = {});

std::string grid_table_csv(const std::vector<GridRow>& table);
std::string grid_table_json(const std::vector<GridRow>& table, std::size_t best_index);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Per class, round(val_fraction * count) examples go to validation, picked
// by a seeded shuffle. Both index lists are sorted.
SplitIndices stratified_split(const LabelVector& labels, double val_fraction, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t dim = 32;
  std::size_t classes = 10;
  double separation = 2.0;  // center scale relative to the unit-scale noise
  double label_noise = 0.0;  // probability of replacing a label by a different class
  double shared_offset = 0.0;  // scale of one direction common to every example
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian blobs around random unit class centers.
///
/// Example i belongs to class i mod C and is
/// shared_offset * u + separation * center + noise, with u a random unit
/// vector shared by all classes and noise ~ N(0, I/dim), rescaled to unit
/// length. Labels are then flipped
/// to a uniformly chosen other class with probability label_noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct SyntheticSplit {
  Dataset train;  // spec.n examples, noisy labels
  Dataset test;   // test_n examples from the same centers, clean labels
};

SyntheticSplit generate_synthetic_split(const SyntheticSpec& spec, std::size_t test_n);

}  // namespace sea
