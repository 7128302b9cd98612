#include "sea/feature_store.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <bit>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "binary_io.hpp"
#include "sea/errors.hpp"

namespace sea {

namespace {

using detail::ByteReader;
using detail::ByteWriter;
using detail::slurp;

constexpr std::array<char, 4> kFeatureMagic{'S', 'E', 'A', 'F'};
constexpr std::array<char, 4> kLabelMagic{'S', 'E', 'A', 'L'};

// Rows whose norm is this close to 1 are treated as already normalized.
constexpr double kAlreadyUnit = 4.0 * FLT_EPSILON;

// Overflow-checked n * k.
bool checked_mul(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
  if (a != 0 && b > UINT64_MAX / a) return false;
  out = a * b;
  return true;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)), normalized_(true) {
  if (rows_ == 0 || cols_ == 0) {
    throw ValidationError("feature matrix must have n >= 1 and d >= 1");
  }
  if (values_.size() != rows_ * cols_) {
    throw DimensionError("feature matrix payload has " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(rows_ * cols_));
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    double sq = 0.0;
    for (float v : row(i)) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite feature value in row " + std::to_string(i));
      }
      sq += double(v) * double(v);
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) normalized_ = false;
  }
}

bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) noexcept {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ &&
         std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
}

LabelVector::LabelVector(std::uint32_t num_classes, std::vector<std::uint32_t> labels)
    : num_classes_(num_classes), labels_(std::move(labels)) {
  if (num_classes_ == 0) {
    throw ValidationError("label vector must declare at least one class");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      throw ValidationError("label " + std::to_string(labels_[i]) + " at index " + std::to_string(i) +
                            " is not below class count " + std::to_string(num_classes_));
    }
  }
}

void write_file_atomically(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError(path.string() + ": cannot open for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError(path.string() + ": write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path.string() + ": rename failed");
  }
}

FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  ByteReader in(bytes, path);
  if (!in.magic(kFeatureMagic)) {
    throw FormatError(path.string() + ": bad magic, not a SEAF feature file");
  }
  const auto version = in.u32();
  if (version != kFeatureFormatVersion) {
    throw FormatError(path.string() + ": unsupported feature file version " + std::to_string(version));
  }
  const auto n = in.u64();
  const auto d = in.u64();
  if (in.u32() != 0) {
    throw FormatError(path.string() + ": reserved header field is nonzero");
  }
  std::uint64_t count = 0;
  std::uint64_t payload = 0;
  if (!checked_mul(n, d, count) || !checked_mul(count, 4, payload)) {
    throw CorruptionError(path.string() + ": header dimensions overflow");
  }
  if (in.remaining() != payload) {
    throw CorruptionError(path.string() + ": payload has " + std::to_string(in.remaining()) +
                          " bytes, header implies " + std::to_string(payload));
  }
  std::vector<float> values(count);
  for (auto& v : values) v = in.f32();
  return FeatureMatrix(n, d, std::move(values));
}

void write_feature_file(const FeatureMatrix& m, const std::filesystem::path& path) {
  ByteWriter out(kFeatureHeaderBytes + m.values().size() * 4);
  out.magic(kFeatureMagic);
  out.u32(kFeatureFormatVersion);
  out.u64(m.rows());
  out.u64(m.cols());
  out.u32(0);
  for (float v : m.values()) out.f32(v);
  write_file_atomically(path, out.bytes());
}

LabelVector read_label_file(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  ByteReader in(bytes, path);
  if (!in.magic(kLabelMagic)) {
    throw FormatError(path.string() + ": bad magic, not a SEAL label file");
  }
  const auto version = in.u32();
  if (version != kLabelFormatVersion) {
    throw FormatError(path.string() + ": unsupported label file version " + std::to_string(version));
  }
  const auto n = in.u64();
  const auto num_classes = in.u32();
  std::uint64_t payload = 0;
  if (!checked_mul(n, 4, payload)) {
    throw CorruptionError(path.string() + ": header count overflows");
  }
  if (in.remaining() != payload) {
    throw CorruptionError(path.string() + ": payload has " + std::to_string(in.remaining()) +
                          " bytes, header implies " + std::to_string(payload));
  }
  std::vector<std::uint32_t> labels(n);
  for (auto& l : labels) l = in.u32();
  return LabelVector(num_classes, std::move(labels));
}

void write_label_file(const LabelVector& labels, const std::filesystem::path& path) {
  ByteWriter out(kLabelHeaderBytes + labels.size() * 4);
  out.magic(kLabelMagic);
  out.u32(kLabelFormatVersion);
  out.u64(labels.size());
  out.u32(labels.num_classes());
  for (auto l : labels.labels()) out.u32(l);
  write_file_atomically(path, out.bytes());
}

NormalizedRows l2_normalize_rows(const FeatureMatrix& m) {
  std::vector<float> values(m.values().begin(), m.values().end());
  std::vector<std::size_t> zero_rows;
  const std::size_t d = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    float* row = values.data() + i * d;
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += double(row[j]) * double(row[j]);
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      zero_rows.push_back(i);
      continue;
    }
    if (std::abs(norm - 1.0) <= kAlreadyUnit) continue;
    for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(double(row[j]) / norm);
  }
  if (!zero_rows.empty()) {
    spdlog::warn("l2_normalize_rows: {} zero row(s) left unnormalized (first at row {})", zero_rows.size(),
                 zero_rows.front());
  }
  return {FeatureMatrix(m.rows(), d, std::move(values)), std::move(zero_rows)};
}

FeatureMatrix concat_features(std::span<const FeatureMatrix> parts) {
  if (parts.empty()) {
    throw ValidationError("concat_features needs at least one part");
  }
  const std::size_t n = parts.front().rows();
  std::size_t width = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].rows() != n) {
      throw DimensionError("concat_features: part " + std::to_string(k) + " has " +
                           std::to_string(parts[k].rows()) + " rows, expected " + std::to_string(n));
    }
    width += parts[k].cols();
  }

  std::vector<float> combined(n * width);
  std::size_t offset = 0;
  for (const auto& part : parts) {
    const auto normalized = l2_normalize_rows(part);
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = normalized.matrix.row(i);
      std::copy(src.begin(), src.end(), combined.begin() + static_cast<std::ptrdiff_t>(i * width + offset));
    }
    offset += part.cols();
  }
  return l2_normalize_rows(FeatureMatrix(n, width, std::move(combined))).matrix;
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  std::vector<float> values;
  values.reserve(rows.size() * m.cols());
  for (auto i : rows) {
    if (i >= m.rows()) {
      throw DimensionError("select_rows: row " + std::to_string(i) + " out of range");
    }
    const auto src = m.row(i);
    values.insert(values.end(), src.begin(), src.end());
  }
  return FeatureMatrix(rows.size(), m.cols(), std::move(values));
}

LabelVector select_labels(const LabelVector& labels, std::span<const std::size_t> rows) {
  std::vector<std::uint32_t> out;
  out.reserve(rows.size());
  for (auto i : rows) {
    if (i >= labels.size()) {
      throw DimensionError("select_labels: index " + std::to_string(i) + " out of range");
    }
    out.push_back(labels[i]);
  }
  return LabelVector(labels.num_classes(), std::move(out));
}

void check_paired(const FeatureMatrix& features, const LabelVector& labels) {
  if (features.rows() != labels.size()) {
    throw DimensionError("feature matrix has " + std::to_string(features.rows()) + " rows but label vector has " +
                         std::to_string(labels.size()) + " entries");
  }
}

Dataset select_examples(const Dataset& data, std::span<const std::size_t> rows) {
  return Dataset(select_rows(data.features, rows), select_labels(data.labels, rows));
}

Dataset append_examples(const Dataset& a, const Dataset& b) {
  if (a.features.cols() != b.features.cols()) {
    throw DimensionError("append_examples: feature dimensions " + std::to_string(a.features.cols()) + " and " +
                         std::to_string(b.features.cols()) + " differ");
  }
  if (a.labels.num_classes() != b.labels.num_classes()) {
    throw DimensionError("append_examples: class counts differ");
  }
  std::vector<float> values(a.features.values().begin(), a.features.values().end());
  values.insert(values.end(), b.features.values().begin(), b.features.values().end());
  std::vector<std::uint32_t> labels(a.labels.labels().begin(), a.labels.labels().end());
  labels.insert(labels.end(), b.labels.labels().begin(), b.labels.labels().end());
  return Dataset(FeatureMatrix(a.size() + b.size(), a.features.cols(), std::move(values)),
                 LabelVector(a.labels.num_classes(), std::move(labels)));
}

CsvImport import_csv(const std::filesystem::path& path, bool labels_in_last_column) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(path.string() + ": cannot open for reading");
  }
  std::vector<float> values;
  std::vector<std::uint32_t> labels;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::size_t feature_fields = fields.size() - (labels_in_last_column ? 1 : 0);
    if (feature_fields == 0) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": no feature columns");
    }
    if (rows == 0) width = feature_fields;
    if (feature_fields != width) {
      throw DimensionError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                           " feature columns, found " + std::to_string(feature_fields));
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      auto field = fields[k];
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (k < feature_fields) {
        float v = 0.0F;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) {
          throw FormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(field) +
                            "' as a float");
        }
        values.push_back(v);
      } else {
        std::uint32_t label = 0;
        const auto [ptr, ec] = std::from_chars(first, last, label);
        if (ec != std::errc() || ptr != last) {
          throw FormatError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(field) +
                            "' as a label");
        }
        labels.push_back(label);
      }
    }
    ++rows;
  }
  if (rows == 0) {
    throw ValidationError(path.string() + ": no data rows");
  }
  return {FeatureMatrix(rows, width, std::move(values)), std::move(labels)};
}

}  // namespace sea
