#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sea/augmentation.hpp"
#include "sea/feature_store.hpp"
#include "sea/loss.hpp"

namespace sea {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 24;

struct TrainConfig {
  double lr = 1.0;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  LossParams loss{};
  AugmentationSpec aug{AugMode::sea, 0.4, 0.01, true};
  std::size_t threads = 1;  // workers per batch; results do not depend on it

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;      // mean loss over the (augmented) examples seen in each epoch
  std::vector<double> train_accuracy;  // fraction of those examples classified correctly
  std::vector<double> val_accuracy;    // top-1 on the validation set; empty without one
  double seconds = 0.0;
  std::size_t skipped_augmentations = 0;
};

struct TrainResult {
  LinearModel model;
  TrainReport report;
};

// All-zero d x C weights.
LinearModel init_model(std::size_t dim, std::size_t classes);

/// Mini-batch SGD with momentum over augmented fixed features.
///
/// Each epoch shuffles the examples with a generator seeded from
/// (seed, epoch) and walks them in batches of `batch_size`, keeping a partial
/// final batch. For every batch the rows are augmented against the current
/// weights, then
///
///   g = mean_i grad_weights(x~_i, y_i) + weight_decay * W
///   v = momentum * v + g
///   W = W - lr * v
///
/// with v starting at zero and a constant learning rate. Features must be
/// unit-normalized. Throws DivergenceError if a batch loss is not finite.
TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* validation = nullptr);

// Number of SGD steps train() takes: epochs * ceil(n / batch_size).
std::size_t iteration_count(std::size_t examples, const TrainConfig& config);

// SEAW checkpoint: "SEAW", u32 version, u64 d, u64 C, then d*C float64
// weights in column-major order, all little-endian.
void write_checkpoint(const LinearModel& model, const std::filesystem::path& path);
LinearModel read_checkpoint(const std::filesystem::path& path);

// One line per epoch: "epoch train_loss train_acc val_acc" (val_acc is "nan"
// without a validation set), preceded by a header line.
std::string format_report_log(const TrainReport& report);
std::string report_to_json(const TrainReport& report);

}  // namespace sea
