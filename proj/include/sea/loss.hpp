#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>

#include "sea/feature_store.hpp"

namespace sea {

// Examples are rows; weights are column-major with one column per class.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

struct LossParams {
  double lambda = 0.1;  // smoothing temperature, > 0
  double delta = 0.0;   // margin added to non-target scores, >= 0

  void validate() const;
};

struct LinearModel {
  Eigen::MatrixXd weights;  // d x C

  std::size_t dim() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(weights.cols()); }
};

// Class distribution p_c proportional to exp((x.w_c + delta*[c != y]) / lambda).
Eigen::VectorXd smoothed_probabilities(const VectorRef& x, std::uint32_t y, const LinearModel& model,
                                       const LossParams& params);

// -lambda * log p_y with p from smoothed_probabilities. Reduces to
// cross-entropy at delta = 0, lambda = 1, and to the multi-class hinge loss as
// lambda -> 0.
double smoothed_hinge(const VectorRef& x, std::uint32_t y, const LinearModel& model, const LossParams& params);

// max{0, delta + max_{c != y} x.w_c - x.w_y}
double multiclass_hinge(const VectorRef& x, std::uint32_t y, const LinearModel& model, double delta);

// Gradient of smoothed_hinge with respect to x: sum_c p_c w_c - w_y.
Eigen::VectorXd grad_features(const VectorRef& x, std::uint32_t y, const LinearModel& model,
                              const LossParams& params);

// Gradient of smoothed_hinge with respect to the weights: x (p - e_y)^T.
// The L2 term is not included.
Eigen::MatrixXd grad_weights(const VectorRef& x, std::uint32_t y, const LinearModel& model,
                             const LossParams& params);

// sum_i loss(x_i, y_i) + tau/2 * ||W||_F^2
double regularized_objective(const RowMatrix& features, std::span<const std::uint32_t> labels,
                             const LinearModel& model, const LossParams& params, double tau);
double regularized_objective(const FeatureMatrix& features, const LabelVector& labels, const LinearModel& model,
                             const LossParams& params, double tau);

// Row-wise loss evaluation from precomputed scores (scores = X W). `probs`
// receives the smoothed class distribution of every row; returns the losses.
Eigen::VectorXd smoothed_hinge_from_scores(const RowMatrix& scores, std::span<const std::uint32_t> labels,
                                           const LossParams& params, RowMatrix& probs);

// Converts float feature rows to a double matrix.
RowMatrix to_row_matrix(const FeatureMatrix& m);

}  // namespace sea
