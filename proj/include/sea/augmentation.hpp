#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "sea/loss.hpp"

namespace sea {

// Where the perturbation direction of each example comes from.
//
//   none     no augmentation
//   sea      loss gradient, projected onto the simplex of the other batch rows
//   adv      raw loss gradient (plain adversarial step)
//   sea_neg  sum_c p_c w_c (gradient without the target-class term), projected
//   rand     uniformly random point of the simplex of the other batch rows
//   mixup    a uniformly random other batch row
enum class AugMode { none, sea, adv, sea_neg, rand, mixup };

std::string_view to_string(AugMode mode) noexcept;
AugMode parse_aug_mode(std::string_view name);

struct AugmentationSpec {
  AugMode mode = AugMode::none;
  double eta = 0.0;    // step size
  double alpha = 0.01;  // entropy weight of the projection; 0 selects the hard argmax
  bool renormalize = true;

  void validate() const;
};

// Convex weights over a set of basis vectors.
struct SimplexWeights {
  Eigen::VectorXd values;
};

// Maximizer over the simplex of sum_j q_j x_j.g + alpha * H(q): the softmax
// of x_j.g / alpha. Rows of `basis` are the x_j; g and every row must have
// unit norm.
SimplexWeights solve_simplex_weights(const VectorRef& g, const RowMatrix& basis, double alpha);

// alpha -> 0 limit of solve_simplex_weights: one-hot at the largest x_j.g,
// ties going to the lowest index.
SimplexWeights hard_argmax_weights(const VectorRef& g, const RowMatrix& basis);

// sum_j q_j x_j
Eigen::VectorXd semantic_direction(const SimplexWeights& q, const RowMatrix& basis);

// x + eta * direction / ||direction||, rescaled to unit norm when
// `renormalize` is set. Returns x unchanged when eta is 0 or the direction
// is (numerically) zero.
Eigen::VectorXd perturb(const VectorRef& x, const VectorRef& direction, double eta, bool renormalize);

// Norm below which a gradient or direction is treated as zero.
inline constexpr double kTinyNorm = 1e-12;

// Identifies the random substream of one batch; example i of the batch draws
// from derive_seed(seed, {epoch, batch, i}).
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t batch = 0;
};

struct AugmentedBatch {
  RowMatrix rows;        // b x d augmented features
  RowMatrix directions;  // b x d raw (unnormalized) directions; zero rows when skipped
  std::size_t skipped = 0;  // examples passed through unaugmented
};

// Augments every row of a batch of unit-norm features against a fixed model.
// Rows are processed in fixed-size chunks on up to `threads` workers; the
// result does not depend on the worker count.
AugmentedBatch augment_batch(const RowMatrix& features, std::span<const std::uint32_t> labels,
                             const LinearModel& model, const LossParams& params, const AugmentationSpec& spec,
                             const StreamKey& stream, std::size_t threads = 1);

}  // namespace sea
