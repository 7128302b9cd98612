#include "sea/trainer.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "sea/errors.hpp"
#include "sea/evaluation.hpp"
#include "sea/parallel.hpp"
#include "sea/rng.hpp"

namespace sea {

namespace {

constexpr std::array<char, 4> kCheckpointMagic{'S', 'E', 'A', 'W'};

// Substream tag for epoch shuffles, kept apart from augmentation streams.
constexpr std::uint64_t kShuffleStream = 0x53485546464C45ULL;

std::uint32_t argmax_row(const auto& row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return static_cast<std::uint32_t>(best);
}

struct ChunkGradient {
  Eigen::MatrixXd grad;
  double loss = 0.0;
  std::size_t correct = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw ParameterError("learning rate must be positive and finite");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ParameterError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ParameterError("weight decay must be nonnegative and finite");
  }
  if (batch_size == 0) {
    throw ParameterError("batch size must be at least 1");
  }
  if (threads == 0) {
    throw ParameterError("thread count must be at least 1");
  }
  loss.validate();
  aug.validate();
}

LinearModel init_model(std::size_t dim, std::size_t classes) {
  if (dim == 0 || classes == 0) {
    throw ParameterError("model needs d >= 1 and C >= 1");
  }
  return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(classes))};
}

std::size_t iteration_count(std::size_t examples, const TrainConfig& config) {
  return config.epochs * ((examples + config.batch_size - 1) / config.batch_size);
}

TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* validation) {
  config.validate();
  const auto& features = data.features;
  const auto& labels = data.labels;
  if (!features.normalized()) {
    throw ValidationError("training features must have unit-norm rows; normalize them first");
  }
  if (validation != nullptr) {
    if (validation->features.cols() != features.cols()) {
      throw DimensionError("validation features have dimension " + std::to_string(validation->features.cols()) +
                           ", training features " + std::to_string(features.cols()));
    }
    if (validation->labels.num_classes() != labels.num_classes()) {
      throw DimensionError("validation labels declare a different class count");
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  TrainResult result{init_model(d, labels.num_classes()), {}};
  Eigen::MatrixXd& weights = result.model.weights;
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(weights.rows(), weights.cols());
  TrainReport& report = result.report;

  std::vector<std::size_t> order(n);
  std::vector<std::uint32_t> batch_labels;
  RowMatrix batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(derive_seed(config.seed, {kShuffleStream, epoch})).shuffle(std::span(order));

    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size, ++batch_index) {
      const std::size_t m = std::min(config.batch_size, n - begin);
      batch.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
      batch_labels.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        const auto row = features.row(order[begin + i]);
        for (std::size_t j = 0; j < d; ++j) batch(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        batch_labels[i] = labels[order[begin + i]];
      }

      const AugmentedBatch augmented =
          augment_batch(batch, batch_labels, result.model, config.loss, config.aug, {config.seed, epoch, batch_index},
                        config.threads);
      report.skipped_augmentations += augmented.skipped;

      const auto chunks = row_chunks(m);
      std::vector<ChunkGradient> partial(chunks.size());
      for_each_chunk(chunks, config.threads, [&](std::size_t k, const RowRange& r) {
        const auto rows = augmented.rows.middleRows(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size()));
        const std::span<const std::uint32_t> y(batch_labels.data() + r.begin, r.size());
        const RowMatrix scores = rows * weights;
        RowMatrix coeff;
        const Eigen::VectorXd losses = smoothed_hinge_from_scores(scores, y, config.loss, coeff);
        auto& out = partial[k];
        out.loss = losses.sum();
        for (std::size_t i = 0; i < r.size(); ++i) {
          const auto li = static_cast<Eigen::Index>(i);
          if (argmax_row(scores.row(li)) == y[i]) ++out.correct;
          coeff(li, y[i]) -= 1.0;
        }
        out.grad.noalias() = rows.transpose() * coeff;
      });

      Eigen::MatrixXd grad = std::move(partial.front().grad);
      double batch_loss = partial.front().loss;
      std::size_t batch_correct = partial.front().correct;
      for (std::size_t k = 1; k < partial.size(); ++k) {
        grad += partial[k].grad;
        batch_loss += partial[k].loss;
        batch_correct += partial[k].correct;
      }
      if (!std::isfinite(batch_loss) || !grad.allFinite()) {
        throw DivergenceError(epoch, batch_index,
                              "training diverged: non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch_index));
      }
      grad /= static_cast<double>(m);
      grad += config.weight_decay * weights;
      velocity = config.momentum * velocity + grad;
      weights -= config.lr * velocity;

      epoch_loss += batch_loss;
      epoch_correct += batch_correct;
    }

    report.train_loss.push_back(epoch_loss / static_cast<double>(n));
    report.train_accuracy.push_back(static_cast<double>(epoch_correct) / static_cast<double>(n));
    if (validation != nullptr) {
      const auto predicted = predict(result.model, validation->features);
      report.val_accuracy.push_back(top1_accuracy(predicted, validation->labels.labels()));
    }
    spdlog::debug("epoch {} loss {:.6f} train_acc {:.4f}", epoch, report.train_loss.back(),
                  report.train_accuracy.back());
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (report.skipped_augmentations > 0) {
    spdlog::warn("{} example visit(s) passed through without augmentation (zero direction or no basis)",
                 report.skipped_augmentations);
  }
  return result;
}

void write_checkpoint(const LinearModel& model, const std::filesystem::path& path) {
  if (!model.weights.allFinite()) {
    throw ValidationError("refusing to write a checkpoint with non-finite weights");
  }
  detail::ByteWriter out(kCheckpointHeaderBytes + model.weights.size() * 8);
  out.magic(kCheckpointMagic);
  out.u32(kCheckpointFormatVersion);
  out.u64(model.dim());
  out.u64(model.classes());
  for (Eigen::Index k = 0; k < model.weights.size(); ++k) out.f64(model.weights.data()[k]);
  write_file_atomically(path, out.bytes());
}

LinearModel read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = detail::slurp(path);
  detail::ByteReader in(bytes, path);
  if (!in.magic(kCheckpointMagic)) {
    throw FormatError(path.string() + ": bad magic, not a SEAW checkpoint");
  }
  const auto version = in.u32();
  if (version != kCheckpointFormatVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto d = in.u64();
  const auto classes = in.u64();
  if (d == 0 || classes == 0 || d > (std::uint64_t{1} << 40) / classes) {
    throw CorruptionError(path.string() + ": implausible checkpoint dimensions");
  }
  if (in.remaining() != d * classes * 8) {
    throw CorruptionError(path.string() + ": payload has " + std::to_string(in.remaining()) +
                          " bytes, header implies " + std::to_string(d * classes * 8));
  }
  LinearModel model = init_model(d, classes);
  for (Eigen::Index k = 0; k < model.weights.size(); ++k) {
    const double w = in.f64();
    if (!std::isfinite(w)) {
      throw ValidationError(path.string() + ": non-finite weight at index " + std::to_string(k));
    }
    model.weights.data()[k] = w;
  }
  return model;
}

std::string format_report_log(const TrainReport& report) {
  std::ostringstream out;
  out << "epoch train_loss train_acc val_acc\n";
  out << std::setprecision(17);
  for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
    out << e << ' ' << report.train_loss[e] << ' ' << report.train_accuracy[e] << ' ';
    if (e < report.val_accuracy.size()) {
      out << report.val_accuracy[e];
    } else {
      out << "nan";
    }
    out << '\n';
  }
  return out.str();
}

std::string report_to_json(const TrainReport& report) {
  nlohmann::json j;
  j["train_loss"] = report.train_loss;
  j["train_accuracy"] = report.train_accuracy;
  j["val_accuracy"] = report.val_accuracy;
  j["seconds"] = report.seconds;
  j["skipped_augmentations"] = report.skipped_augmentations;
  return j.dump(2);
}

}  // namespace sea
