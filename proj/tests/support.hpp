#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <unistd.h>
#include <string>
#include <vector>

#include "sea/feature_store.hpp"
#include "sea/loss.hpp"
#include "sea/rng.hpp"

namespace sea::test {

// Random instance generators for property tests. All draw from sea::Rng so
// failures reproduce from the printed seed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  Rng& rng() { return rng_; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_.bounded(n)); }

  Eigen::VectorXd normal_vector(Eigen::Index d, double scale = 1.0) {
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v[j] = scale * rng_.normal();
    return v;
  }

  Eigen::VectorXd unit_vector(Eigen::Index d) {
    Eigen::VectorXd v = normal_vector(d);
    return v / v.norm();
  }

  RowMatrix unit_rows(Eigen::Index n, Eigen::Index d) {
    RowMatrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) m.row(i) = unit_vector(d).transpose();
    return m;
  }

  LinearModel model(Eigen::Index d, Eigen::Index classes, double scale = 1.0) {
    LinearModel m{Eigen::MatrixXd(d, classes)};
    for (Eigen::Index k = 0; k < m.weights.size(); ++k) m.weights.data()[k] = scale * rng_.normal();
    return m;
  }

  // Uniform on the simplex (normalized exponentials).
  Eigen::VectorXd simplex_point(Eigen::Index n) {
    Eigen::VectorXd q(n);
    for (Eigen::Index j = 0; j < n; ++j) q[j] = rng_.exponential();
    return q / q.sum();
  }

  std::vector<std::uint32_t> labels(std::size_t n, std::uint32_t classes) {
    std::vector<std::uint32_t> out(n);
    for (auto& l : out) l = static_cast<std::uint32_t>(rng_.bounded(classes));
    return out;
  }

  FeatureMatrix feature_matrix(std::size_t n, std::size_t d) {
    std::vector<float> values(n * d);
    for (auto& v : values) v = static_cast<float>(rng_.normal());
    return FeatureMatrix(n, d, std::move(values));
  }

 private:
  Rng rng_;
};

inline RowMatrix as_rows(const FeatureMatrix& m) { return to_row_matrix(m); }

// Fresh, empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sea_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<char> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace sea::test
