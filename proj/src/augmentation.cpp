#include "sea/augmentation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sea/errors.hpp"
#include "sea/parallel.hpp"
#include "sea/rng.hpp"

namespace sea {

namespace {

constexpr std::string_view kModeNames[] = {"none", "sea", "adv", "sea_neg", "rand", "mixup"};

bool is_projected(AugMode mode) {
  return mode == AugMode::sea || mode == AugMode::sea_neg || mode == AugMode::rand || mode == AugMode::mixup;
}

bool is_gradient_based(AugMode mode) {
  return mode == AugMode::sea || mode == AugMode::sea_neg || mode == AugMode::adv;
}

void require_unit(double norm, const char* what) {
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw ValidationError(std::string(what) + " must have unit norm, got norm " + std::to_string(norm));
  }
}

// out[k] = softmax(dots / alpha)[k] over the entries with keep(k), zero
// elsewhere. alpha == 0 gives the one-hot argmax with ties to the lowest k.
template <typename Dots, typename Out, typename Keep>
void simplex_weights_into(const Dots& dots, double alpha, Keep&& keep, Out&& out) {
  const auto n = dots.size();
  double top = -std::numeric_limits<double>::infinity();
  Eigen::Index best = -1;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (keep(k) && dots[k] > top) {
      top = dots[k];
      best = k;
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) out[k] = 0.0;
  if (alpha == 0.0) {
    out[best] = 1.0;
    return;
  }
  double z = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!keep(k)) continue;
    out[k] = std::exp((dots[k] - top) / alpha);
    z += out[k];
  }
  for (Eigen::Index k = 0; k < n; ++k) out[k] /= z;
}

// In-place x <- Pi(x + eta * Pi(direction)). Returns false, leaving x
// untouched, when the direction is numerically zero.
template <typename Row, typename Dir>
bool perturb_in_place(Row&& x, const Dir& direction, double eta, bool renormalize) {
  if (eta == 0.0) return true;
  const double dir_norm = direction.norm();
  if (!(dir_norm >= kTinyNorm)) return false;
  x += (eta / dir_norm) * direction;
  if (renormalize) {
    const double norm = x.norm();
    if (norm > 0.0) x /= norm;
  }
  return true;
}

}  // namespace

std::string_view to_string(AugMode mode) noexcept {
  return kModeNames[static_cast<int>(mode)];
}

AugMode parse_aug_mode(std::string_view name) {
  for (int k = 0; k < 6; ++k) {
    if (kModeNames[k] == name) return static_cast<AugMode>(k);
  }
  throw ParameterError("unknown augmentation mode '" + std::string(name) +
                       "' (expected none, sea, adv, sea_neg, rand or mixup)");
}

void AugmentationSpec::validate() const {
  if (static_cast<int>(mode) < 0 || static_cast<int>(mode) > 5) {
    throw ParameterError("unknown augmentation mode");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ParameterError("augmentation step eta must be nonnegative and finite, got " + std::to_string(eta));
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("entropy weight alpha must be nonnegative and finite, got " + std::to_string(alpha));
  }
}

SimplexWeights solve_simplex_weights(const VectorRef& g, const RowMatrix& basis, double alpha) {
  if (basis.rows() == 0) {
    throw DegenerateBasisError("cannot project onto an empty basis");
  }
  if (basis.cols() != g.size()) {
    throw DimensionError("basis dimension " + std::to_string(basis.cols()) + " does not match gradient dimension " +
                         std::to_string(g.size()));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("entropy weight alpha must be positive, got " + std::to_string(alpha));
  }
  require_unit(g.norm(), "projected gradient");
  for (Eigen::Index j = 0; j < basis.rows(); ++j) require_unit(basis.row(j).norm(), "basis vector");

  const Eigen::VectorXd dots = basis * g;
  SimplexWeights q{Eigen::VectorXd(dots.size())};
  simplex_weights_into(dots, alpha, [](Eigen::Index) { return true; }, q.values);
  return q;
}

SimplexWeights hard_argmax_weights(const VectorRef& g, const RowMatrix& basis) {
  if (basis.rows() == 0) {
    throw DegenerateBasisError("cannot project onto an empty basis");
  }
  if (basis.cols() != g.size()) {
    throw DimensionError("basis dimension does not match gradient dimension");
  }
  const Eigen::VectorXd dots = basis * g;
  SimplexWeights q{Eigen::VectorXd(dots.size())};
  simplex_weights_into(dots, 0.0, [](Eigen::Index) { return true; }, q.values);
  return q;
}

Eigen::VectorXd semantic_direction(const SimplexWeights& q, const RowMatrix& basis) {
  if (q.values.size() != basis.rows()) {
    throw DimensionError("simplex weights and basis differ in length");
  }
  return basis.transpose() * q.values;
}

Eigen::VectorXd perturb(const VectorRef& x, const VectorRef& direction, double eta, bool renormalize) {
  if (x.size() != direction.size()) {
    throw DimensionError("perturb: feature and direction dimensions differ");
  }
  Eigen::VectorXd out = x;
  perturb_in_place(out, direction, eta, renormalize);
  return out;
}

AugmentedBatch augment_batch(const RowMatrix& features, std::span<const std::uint32_t> labels,
                             const LinearModel& model, const LossParams& params, const AugmentationSpec& spec,
                             const StreamKey& stream, std::size_t threads) {
  spec.validate();
  const auto b = features.rows();
  const auto d = features.cols();
  if (b == 0) {
    throw ValidationError("augment_batch needs at least one example");
  }
  if (static_cast<std::size_t>(b) != labels.size()) {
    throw DimensionError("augment_batch: " + std::to_string(b) + " rows but " + std::to_string(labels.size()) +
                         " labels");
  }
  if (static_cast<std::size_t>(d) != model.dim()) {
    throw DimensionError("augment_batch: feature dimension " + std::to_string(d) + " does not match model dimension " +
                         std::to_string(model.dim()));
  }

  AugmentedBatch out{features, RowMatrix::Zero(b, d), 0};
  if (spec.mode == AugMode::none || spec.eta == 0.0) return out;

  const AugMode mode = spec.mode;
  if (is_projected(mode) && b == 1) {
    out.skipped = 1;
    spdlog::debug("augment_batch: single-example batch has no projection basis, passing through");
    return out;
  }

  const auto chunks = row_chunks(static_cast<std::size_t>(b));

  // Gradient w.r.t. each feature row is W c_i with c_i = p_i - e_{y_i}
  // (sea, adv) or c_i = p_i (sea_neg).
  RowMatrix scores;
  RowMatrix coeff;
  RowMatrix grads;
  Eigen::VectorXd grad_norms;
  if (is_gradient_based(mode)) {
    params.validate();
    const auto classes = static_cast<Eigen::Index>(model.classes());
    scores.resize(b, classes);
    coeff.resize(b, classes);
    grads.resize(b, d);
    grad_norms.resize(b);
    for_each_chunk(chunks, threads, [&](std::size_t, const RowRange& r) {
      const auto begin = static_cast<Eigen::Index>(r.begin);
      const auto rows = static_cast<Eigen::Index>(r.size());
      RowMatrix s = features.middleRows(begin, rows) * model.weights;
      RowMatrix p;
      smoothed_hinge_from_scores(s, labels.subspan(r.begin, r.size()), params, p);
      if (mode != AugMode::sea_neg) {
        for (Eigen::Index i = 0; i < rows; ++i) p(i, labels[r.begin + static_cast<std::size_t>(i)]) -= 1.0;
      }
      grads.middleRows(begin, rows).noalias() = p * model.weights.transpose();
      grad_norms.segment(begin, rows) = grads.middleRows(begin, rows).rowwise().norm();
      scores.middleRows(begin, rows) = s;
      coeff.middleRows(begin, rows) = p;
    });
  }

  std::vector<unsigned char> skipped(static_cast<std::size_t>(b), 0);
  for_each_chunk(chunks, threads, [&](std::size_t, const RowRange& r) {
    const auto begin = static_cast<Eigen::Index>(r.begin);
    const auto rows = static_cast<Eigen::Index>(r.size());
    auto directions = out.directions.middleRows(begin, rows);

    if (mode == AugMode::adv) {
      for (Eigen::Index li = 0; li < rows; ++li) {
        if (grad_norms[begin + li] >= kTinyNorm) directions.row(li) = grads.row(begin + li);
      }
    } else {
      RowMatrix weights = RowMatrix::Zero(rows, b);
      if (mode == AugMode::sea || mode == AugMode::sea_neg) {
        // x_j . g_i = c_i . (W^T x_j), so the dot products come from the scores.
        RowMatrix dots = coeff.middleRows(begin, rows) * scores.transpose();
        for (Eigen::Index li = 0; li < rows; ++li) {
          const Eigen::Index i = begin + li;
          if (!(grad_norms[i] >= kTinyNorm)) continue;
          dots.row(li) /= grad_norms[i];
          simplex_weights_into(dots.row(li), spec.alpha, [i](Eigen::Index j) { return j != i; }, weights.row(li));
        }
      } else if (mode == AugMode::rand) {
        for (Eigen::Index li = 0; li < rows; ++li) {
          const Eigen::Index i = begin + li;
          Rng rng(derive_seed(stream.seed, {stream.epoch, stream.batch, static_cast<std::uint64_t>(i)}));
          double total = 0.0;
          for (Eigen::Index j = 0; j < b; ++j) {
            if (j == i) continue;
            weights(li, j) = rng.exponential();
            total += weights(li, j);
          }
          weights.row(li) /= total;
        }
      } else {  // mixup
        for (Eigen::Index li = 0; li < rows; ++li) {
          const Eigen::Index i = begin + li;
          Rng rng(derive_seed(stream.seed, {stream.epoch, stream.batch, static_cast<std::uint64_t>(i)}));
          auto j = static_cast<Eigen::Index>(rng.bounded(static_cast<std::uint64_t>(b - 1)));
          if (j >= i) ++j;
          weights(li, j) = 1.0;
        }
      }
      directions.noalias() = weights * features;
    }

    for (Eigen::Index li = 0; li < rows; ++li) {
      const Eigen::Index i = begin + li;
      if (!perturb_in_place(out.rows.row(i), directions.row(li), spec.eta, spec.renormalize)) {
        skipped[static_cast<std::size_t>(i)] = 1;
      }
    }
  });

  out.skipped = static_cast<std::size_t>(std::count(skipped.begin(), skipped.end(), 1));
  if (out.skipped > 0) {
    spdlog::debug("augment_batch: {} of {} example(s) had a zero direction and were not augmented", out.skipped, b);
  }
  return out;
}

}  // namespace sea
