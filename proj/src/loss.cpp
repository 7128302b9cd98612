#include "sea/loss.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sea/errors.hpp"

namespace sea {

namespace {

void check_example(const VectorRef& x, std::uint32_t y, const LinearModel& model) {
  if (static_cast<std::size_t>(x.size()) != model.dim()) {
    throw DimensionError("feature vector has dimension " + std::to_string(x.size()) + ", model expects " +
                         std::to_string(model.dim()));
  }
  if (y >= model.classes()) {
    throw ValidationError("label " + std::to_string(y) + " is not below class count " +
                         std::to_string(model.classes()));
  }
}

// Fills probs (length C) and returns the loss for one row of scores.
//
// Works on the unscaled margins a_c = s_c + delta*[c != y]. With M = max_c a_c
// the loss is (M - s_y) + lambda * log sum_c exp((a_c - M) / lambda); the first
// term is exactly the hinge loss and the second lies in [0, lambda log C].
template <typename Scores, typename Probs>
double smoothed_row(const Scores& scores, std::uint32_t y, const LossParams& params, Probs&& probs) {
  const auto classes = scores.size();
  double top = -std::numeric_limits<double>::infinity();
  Eigen::Index lead = 0;
  for (Eigen::Index c = 0; c < classes; ++c) {
    const double margin = c == y ? scores[c] : scores[c] + params.delta;
    if (margin > top) {
      top = margin;
      lead = c;
    }
  }
  // The leading term is exactly 1; summing the rest separately keeps the
  // log accurate when the rest is tiny.
  double rest = 0.0;
  for (Eigen::Index c = 0; c < classes; ++c) {
    const double margin = c == y ? scores[c] : scores[c] + params.delta;
    probs[c] = c == lead ? 1.0 : std::exp((margin - top) / params.lambda);
    if (c != lead) rest += probs[c];
  }
  const double z = 1.0 + rest;
  for (Eigen::Index c = 0; c < classes; ++c) probs[c] /= z;
  return (top - scores[y]) + params.lambda * std::log1p(rest);
}

}  // namespace

void LossParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("smoothing coefficient lambda must be positive and finite, got " + std::to_string(lambda));
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ParameterError("margin delta must be nonnegative and finite, got " + std::to_string(delta));
  }
}

Eigen::VectorXd smoothed_probabilities(const VectorRef& x, std::uint32_t y, const LinearModel& model,
                                       const LossParams& params) {
  params.validate();
  check_example(x, y, model);
  const Eigen::VectorXd scores = model.weights.transpose() * x;
  Eigen::VectorXd probs(scores.size());
  smoothed_row(scores, y, params, probs);
  return probs;
}

double smoothed_hinge(const VectorRef& x, std::uint32_t y, const LinearModel& model, const LossParams& params) {
  params.validate();
  check_example(x, y, model);
  const Eigen::VectorXd scores = model.weights.transpose() * x;
  Eigen::VectorXd probs(scores.size());
  return smoothed_row(scores, y, params, probs);
}

double multiclass_hinge(const VectorRef& x, std::uint32_t y, const LinearModel& model, double delta) {
  check_example(x, y, model);
  const Eigen::VectorXd scores = model.weights.transpose() * x;
  double rival = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < scores.size(); ++c) {
    if (c != y) rival = std::max(rival, scores[c] + delta);
  }
  return std::max(0.0, rival - scores[y]);
}

Eigen::VectorXd grad_features(const VectorRef& x, std::uint32_t y, const LinearModel& model,
                              const LossParams& params) {
  Eigen::VectorXd coeff = smoothed_probabilities(x, y, model, params);
  coeff[y] -= 1.0;
  return model.weights * coeff;
}

Eigen::MatrixXd grad_weights(const VectorRef& x, std::uint32_t y, const LinearModel& model,
                             const LossParams& params) {
  Eigen::VectorXd coeff = smoothed_probabilities(x, y, model, params);
  coeff[y] -= 1.0;
  return x * coeff.transpose();
}

Eigen::VectorXd smoothed_hinge_from_scores(const RowMatrix& scores, std::span<const std::uint32_t> labels,
                                           const LossParams& params, RowMatrix& probs) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
    throw DimensionError("score rows and labels differ in count");
  }
  probs.resize(scores.rows(), scores.cols());
  Eigen::VectorXd losses(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto y = labels[static_cast<std::size_t>(i)];
    if (y >= scores.cols()) {
      throw ValidationError("label " + std::to_string(y) + " is not below class count " +
                           std::to_string(scores.cols()));
    }
    losses[i] = smoothed_row(scores.row(i), y, params, probs.row(i));
  }
  return losses;
}

double regularized_objective(const RowMatrix& features, std::span<const std::uint32_t> labels,
                             const LinearModel& model, const LossParams& params, double tau) {
  params.validate();
  if (features.rows() == 0) {
    throw ValidationError("regularized_objective needs a nonempty dataset");
  }
  if (static_cast<std::size_t>(features.cols()) != model.dim()) {
    throw DimensionError("dataset dimension does not match the model");
  }
  const RowMatrix scores = features * model.weights;
  RowMatrix probs;
  const Eigen::VectorXd losses = smoothed_hinge_from_scores(scores, labels, params, probs);
  return losses.sum() + 0.5 * tau * model.weights.squaredNorm();
}

double regularized_objective(const FeatureMatrix& features, const LabelVector& labels, const LinearModel& model,
                             const LossParams& params, double tau) {
  check_paired(features, labels);
  return regularized_objective(to_row_matrix(features), labels.labels(), model, params, tau);
}

RowMatrix to_row_matrix(const FeatureMatrix& m) {
  RowMatrix out(m.rows(), m.cols());
  const auto values = m.values();
  for (std::size_t k = 0; k < values.size(); ++k) out.data()[k] = values[k];
  return out;
}

}  // namespace sea
