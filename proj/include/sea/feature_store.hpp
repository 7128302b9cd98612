#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace sea {

inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::uint32_t kLabelFormatVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 28;
inline constexpr std::size_t kLabelHeaderBytes = 20;

// Tolerance on row norms for a matrix to count as unit-normalized.
inline constexpr double kUnitNormTolerance = 1e-6;

/// An immutable n x d row-major matrix of 32-bit feature values.
///
/// Construction validates that every value is finite and that n, d >= 1, and
/// records whether every row has unit L2 norm (within kUnitNormTolerance).
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  float at(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

  // Bitwise equality of shape and payload.
  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) noexcept;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<float> values_;
  bool normalized_;
};

/// n class indices, each strictly below num_classes.
class LabelVector {
 public:
  LabelVector(std::uint32_t num_classes, std::vector<std::uint32_t> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::uint32_t num_classes() const noexcept { return num_classes_; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::uint32_t operator[](std::size_t i) const noexcept { return labels_[i]; }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::uint32_t num_classes_;
  std::vector<std::uint32_t> labels_;
};

FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const FeatureMatrix& m, const std::filesystem::path& path);

LabelVector read_label_file(const std::filesystem::path& path);
void write_label_file(const LabelVector& labels, const std::filesystem::path& path);

struct NormalizedRows {
  FeatureMatrix matrix;
  std::vector<std::size_t> zero_rows;
};

// Scales every nonzero row to unit L2 norm. Zero rows stay zero and are
// listed in zero_rows (with a logged warning). Rows already within float
// rounding of unit norm are copied unchanged, which makes the operation
// idempotent.
NormalizedRows l2_normalize_rows(const FeatureMatrix& m);

// Row-normalizes each part, concatenates the parts column-wise in order, and
// normalizes the combined rows.
FeatureMatrix concat_features(std::span<const FeatureMatrix> parts);

// Row subset in the given order.
FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows);
LabelVector select_labels(const LabelVector& labels, std::span<const std::size_t> rows);

void check_paired(const FeatureMatrix& features, const LabelVector& labels);

// Features with their labels; construction checks that the counts agree.
struct Dataset {
  Dataset(FeatureMatrix f, LabelVector l) : features(std::move(f)), labels(std::move(l)) {
    check_paired(features, labels);
  }

  std::size_t size() const noexcept { return features.rows(); }

  FeatureMatrix features;
  LabelVector labels;
};

Dataset select_examples(const Dataset& data, std::span<const std::size_t> rows);

// Rows of `a` followed by rows of `b`. Dimensions and class counts must agree.
Dataset append_examples(const Dataset& a, const Dataset& b);

struct CsvImport {
  FeatureMatrix features;
  std::vector<std::uint32_t> labels;  // empty unless requested
};

// Header-free CSV of comma-separated floats. When labels_in_last_column is
// set, the final column of each line is parsed as a nonnegative integer label.
CsvImport import_csv(const std::filesystem::path& path, bool labels_in_last_column);

// Writes bytes to `path` via a temporary sibling and a rename, so readers
// never observe a partially written file.
void write_file_atomically(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace sea
