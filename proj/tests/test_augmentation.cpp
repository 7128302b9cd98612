#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sea/augmentation.hpp"
#include "sea/errors.hpp"
#include "support.hpp"

namespace sea {
namespace {

using test::Gen;

RowMatrix without_row(const RowMatrix& m, Eigen::Index skip) {
  RowMatrix out(m.rows() - 1, m.cols());
  for (Eigen::Index i = 0, k = 0; i < m.rows(); ++i) {
    if (i != skip) out.row(k++) = m.row(i);
  }
  return out;
}

TEST(AugMode, NamesRoundTrip) {
  for (auto mode : {AugMode::none, AugMode::sea, AugMode::adv, AugMode::sea_neg, AugMode::rand, AugMode::mixup}) {
    EXPECT_EQ(parse_aug_mode(to_string(mode)), mode);
  }
  EXPECT_THROW(parse_aug_mode("isda"), ParameterError);
}

TEST(AugmentationSpec, Validation) {
  EXPECT_THROW((AugmentationSpec{AugMode::sea, -0.1, 0.01, true}).validate(), ParameterError);
  EXPECT_THROW((AugmentationSpec{AugMode::sea, 0.4, -1.0, true}).validate(), ParameterError);
  EXPECT_NO_THROW((AugmentationSpec{AugMode::sea, 0.0, 0.0, true}).validate());
}

TEST(SimplexWeights, SymmetricBasisSplitsEvenly) {
  RowMatrix basis(2, 2);
  basis << 1, 0, 0, 1;
  const Eigen::Vector2d g(std::sqrt(0.5), std::sqrt(0.5));
  const auto q = solve_simplex_weights(g, basis, 0.01);
  EXPECT_NEAR(q.values[0], 0.5, 1e-15);
  EXPECT_NEAR(q.values[1], 0.5, 1e-15);
}

TEST(SimplexWeights, HugeAlphaIsNearlyUniform) {
  Gen gen(1);
  const auto basis = gen.unit_rows(5, 4);
  const auto q = solve_simplex_weights(gen.unit_vector(4), basis, 1e6);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(q.values[j], 0.2, 1e-3);
}

TEST(SimplexWeights, MatchesAscentOracle) {
  Gen gen(2);
  const auto basis = gen.unit_rows(4, 8);
  const auto g = gen.unit_vector(8);
  const auto q = solve_simplex_weights(g, basis, 0.01);
  const auto ref = oracle::simplex_ascent(basis * g, 0.01);
  EXPECT_LE((q.values - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SimplexWeights, ErrorsOnDegenerateInput) {
  Gen gen(3);
  const auto g = gen.unit_vector(3);
  EXPECT_THROW(solve_simplex_weights(g, RowMatrix(0, 3), 0.1), DegenerateBasisError);
  EXPECT_THROW(solve_simplex_weights(g, gen.unit_rows(2, 3), 0.0), ParameterError);
  EXPECT_THROW(solve_simplex_weights(g, gen.unit_rows(2, 4), 0.1), DimensionError);
  EXPECT_THROW(solve_simplex_weights(2.0 * g, gen.unit_rows(2, 3), 0.1), ValidationError);
  RowMatrix long_rows = 2.0 * gen.unit_rows(2, 3);
  EXPECT_THROW(solve_simplex_weights(g, long_rows, 0.1), ValidationError);
  EXPECT_THROW(hard_argmax_weights(g, RowMatrix(0, 3)), DegenerateBasisError);
}

TEST(SimplexWeights, PropertiesOnRandomInstances) {
  Gen gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + gen.index(30));
    const auto m = static_cast<Eigen::Index>(1 + gen.index(60));
    const double alpha = std::pow(10.0, gen.uniform(-3, 1));
    const auto basis = gen.unit_rows(m, d);
    const auto g = gen.unit_vector(d);
    const auto q = solve_simplex_weights(g, basis, alpha);
    const Eigen::VectorXd a = basis * g;
    ASSERT_NEAR(q.values.sum(), 1.0, 1e-9);
    ASSERT_GE(q.values.minCoeff(), 0.0);
    const double best = oracle::simplex_objective(q.values, a, alpha);
    for (int k = 0; k < 50; ++k) {
      EXPECT_GE(best, oracle::simplex_objective(gen.simplex_point(m), a, alpha) - 1e-9);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index k = 0; k < m; ++k) {
        if (q.values[j] > 1e-12 && q.values[k] > 1e-12) {
          EXPECT_NEAR(std::log(q.values[j]) - std::log(q.values[k]), (a[j] - a[k]) / alpha, 1e-8);
        }
      }
    }
  }
}

TEST(HardArgmax, PicksLargestDotWithLowestIndexOnTies) {
  RowMatrix basis(3, 2);
  basis << 0, 1, 1, 0, 1, 0;
  const auto q = hard_argmax_weights(Eigen::Vector2d(1, 0), basis);
  EXPECT_EQ(q.values, Eigen::Vector3d(0, 1, 0));
  Gen gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = gen.unit_rows(9, 4);
    const auto g = gen.unit_vector(4);
    const Eigen::VectorXd dots = b * g;
    const auto best = oracle::argmax_scan(std::span(dots.data(), 9));
    EXPECT_EQ(hard_argmax_weights(g, b).values[static_cast<Eigen::Index>(best)], 1.0);
  }
}

TEST(SemanticDirection, VerticesAndCancellation) {
  Gen gen(6);
  const auto basis = gen.unit_rows(3, 5);
  const auto v = semantic_direction({Eigen::Vector3d(0, 1, 0)}, basis);
  EXPECT_EQ(v, Eigen::VectorXd(basis.row(1).transpose()));
  RowMatrix antipodal(2, 5);
  antipodal.row(0) = basis.row(0);
  antipodal.row(1) = -basis.row(0);
  EXPECT_LT(semantic_direction({Eigen::Vector2d(0.5, 0.5)}, antipodal).norm(), 1e-15);
  EXPECT_THROW(semantic_direction({Eigen::Vector2d(0.5, 0.5)}, basis), DimensionError);
}

TEST(SemanticDirection, NormBoundAndPropOne) {
  Gen gen(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + gen.index(40));
    const auto m = static_cast<Eigen::Index>(1 + gen.index(40));
    const auto basis = gen.unit_rows(m, d);
    const auto g = gen.unit_vector(d);
    const SimplexWeights q{gen.simplex_point(m)};
    const auto dir = semantic_direction(q, basis);
    EXPECT_LE(dir.norm(), 1.0 + 1e-9);
    const double rhs = 2.0 - 2.0 * q.values.dot(basis * g);
    EXPECT_LE((dir - g).squaredNorm(), rhs + 1e-9);
  }
}

TEST(Perturb, Examples) {
  Gen gen(8);
  const auto x = gen.unit_vector(6);
  const auto dir = gen.normal_vector(6);
  EXPECT_EQ(perturb(x, dir, 0.0, true), x);
  EXPECT_LT((perturb(x, 3.0 * x, 0.7, true) - x).norm(), 1e-15);
  EXPECT_EQ(perturb(x, Eigen::VectorXd::Zero(6), 0.4, true), x);
  const auto moved = perturb(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 0.4, true);
  EXPECT_NEAR(moved[0], 1.0 / std::sqrt(1.16), 1e-15);
  EXPECT_NEAR(moved[1], 0.4 / std::sqrt(1.16), 1e-15);
  const auto raw = perturb(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 5), 0.4, false);
  EXPECT_NEAR(raw[1], 0.4, 1e-15);
  EXPECT_THROW(perturb(x, Eigen::VectorXd::Zero(5), 0.4, true), DimensionError);
}

TEST(Perturb, RenormalizedOutputsAreUnit) {
  Gen gen(9);
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = gen.unit_vector(10);
    EXPECT_NEAR(perturb(x, gen.normal_vector(10), gen.uniform(0, 2), true).norm(), 1.0, 1e-9);
  }
}

struct BatchFixture {
  RowMatrix features;
  std::vector<std::uint32_t> labels;
  LinearModel model;
};

BatchFixture random_batch(Gen& gen, Eigen::Index b, Eigen::Index d, Eigen::Index classes) {
  return {gen.unit_rows(b, d), gen.labels(static_cast<std::size_t>(b), static_cast<std::uint32_t>(classes)),
          gen.model(d, classes)};
}

TEST(AugmentBatch, NoneAndZeroStepAreIdentity) {
  Gen gen(10);
  const auto batch = random_batch(gen, 12, 6, 3);
  for (auto mode : {AugMode::none, AugMode::sea, AugMode::rand}) {
    const double eta = mode == AugMode::none ? 0.4 : 0.0;
    const auto out = augment_batch(batch.features, batch.labels, batch.model, {}, {mode, eta, 0.01, true}, {});
    EXPECT_EQ(out.rows, batch.features);
    EXPECT_EQ(out.skipped, 0U);
  }
}

TEST(AugmentBatch, ShapeErrors) {
  Gen gen(11);
  const auto batch = random_batch(gen, 4, 5, 3);
  const AugmentationSpec spec{AugMode::sea, 0.4, 0.01, true};
  EXPECT_THROW(augment_batch(batch.features, std::vector<std::uint32_t>{0, 1}, batch.model, {}, spec, {}),
               DimensionError);
  EXPECT_THROW(augment_batch(batch.features, batch.labels, gen.model(4, 3), {}, spec, {}), DimensionError);
  EXPECT_THROW(augment_batch(RowMatrix(0, 5), {}, batch.model, {}, spec, {}), ValidationError);
}

TEST(AugmentBatch, SeaDirectionsLieInHullOfOtherRows) {
  Gen gen(12);
  const auto batch = random_batch(gen, 4, 7, 3);
  const auto out = augment_batch(batch.features, batch.labels, batch.model, {0.1, 0.0},
                                 {AugMode::sea, 0.4, 0.05, true}, {});
  EXPECT_EQ(out.skipped, 0U);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(out.rows.row(i).norm(), 1.0, 1e-9);
    const auto fit = oracle::hull_fit(out.directions.row(i).transpose(), without_row(batch.features, i));
    EXPECT_LE(fit.residual, 1e-9) << "row " << i;
    EXPECT_GE(fit.coefficients.minCoeff(), -1e-9) << "row " << i;
  }
}

TEST(AugmentBatch, SeaMatchesPerExampleComposition) {
  Gen gen(13);
  for (double alpha : {0.0, 0.01, 0.5}) {
    const auto batch = random_batch(gen, 9, 5, 4);
    const LossParams params{0.1, 1.0};
    const auto out =
        augment_batch(batch.features, batch.labels, batch.model, params, {AugMode::sea, 0.4, alpha, true}, {});
    for (Eigen::Index i = 0; i < 9; ++i) {
      const Eigen::VectorXd x = batch.features.row(i).transpose();
      Eigen::VectorXd g = grad_features(x, batch.labels[static_cast<std::size_t>(i)], batch.model, params);
      g /= g.norm();
      const auto basis = without_row(batch.features, i);
      const auto q = alpha > 0.0 ? solve_simplex_weights(g, basis, alpha) : hard_argmax_weights(g, basis);
      const auto expected = perturb(x, semantic_direction(q, basis), 0.4, true);
      EXPECT_LT((out.rows.row(i).transpose() - expected).norm(), 1e-12) << "alpha " << alpha << " row " << i;
    }
  }
}

TEST(AugmentBatch, AdvUsesRawGradientAndIncreasesLoss) {
  Gen gen(14);
  const auto batch = random_batch(gen, 6, 5, 4);
  const LossParams params{0.1, 0.0};
  const auto out = augment_batch(batch.features, batch.labels, batch.model, params, {AugMode::adv, 1e-4, 0.01, false},
                                 {});
  for (Eigen::Index i = 0; i < 6; ++i) {
    const Eigen::VectorXd x = batch.features.row(i).transpose();
    const auto y = batch.labels[static_cast<std::size_t>(i)];
    const auto g = grad_features(x, y, batch.model, params);
    EXPECT_LT((out.directions.row(i).transpose() - g).norm(), 1e-12);
    EXPECT_GE(smoothed_hinge(out.rows.row(i).transpose(), y, batch.model, params),
              smoothed_hinge(x, y, batch.model, params) - 1e-9);
  }
}

TEST(AugmentBatch, SeaNegDropsTargetTerm) {
  Gen gen(15);
  const auto batch = random_batch(gen, 5, 4, 3);
  const LossParams params{0.1, 0.0};
  const auto out = augment_batch(batch.features, batch.labels, batch.model, params,
                                 {AugMode::sea_neg, 0.4, 0.02, true}, {});
  for (Eigen::Index i = 0; i < 5; ++i) {
    const Eigen::VectorXd x = batch.features.row(i).transpose();
    const auto p = smoothed_probabilities(x, batch.labels[static_cast<std::size_t>(i)], batch.model, params);
    Eigen::VectorXd g = batch.model.weights * p;
    g /= g.norm();
    const auto basis = without_row(batch.features, i);
    const auto expected = semantic_direction(solve_simplex_weights(g, basis, 0.02), basis);
    EXPECT_LT((out.directions.row(i).transpose() - expected).norm(), 1e-12);
  }
}

TEST(AugmentBatch, RandAndMixupStayInHullAndAreDeterministic) {
  Gen gen(16);
  const auto batch = random_batch(gen, 7, 9, 3);
  for (auto mode : {AugMode::rand, AugMode::mixup}) {
    const AugmentationSpec spec{mode, 0.4, 0.01, true};
    const auto a = augment_batch(batch.features, batch.labels, batch.model, {}, spec, {5, 1, 2});
    const auto b = augment_batch(batch.features, batch.labels, batch.model, {}, spec, {5, 1, 2});
    const auto c = augment_batch(batch.features, batch.labels, batch.model, {}, spec, {5, 1, 3});
    EXPECT_EQ(a.rows, b.rows);
    EXPECT_NE(a.rows, c.rows);
    for (Eigen::Index i = 0; i < 7; ++i) {
      const auto fit = oracle::hull_fit(a.directions.row(i).transpose(), without_row(batch.features, i));
      EXPECT_LE(fit.residual, 1e-9);
      EXPECT_GE(fit.coefficients.minCoeff(), -1e-9);
      if (mode == AugMode::mixup) {
        bool matches_other = false;
        for (Eigen::Index j = 0; j < 7; ++j) {
          matches_other |= j != i && a.directions.row(i) == batch.features.row(j);
        }
        EXPECT_TRUE(matches_other) << "row " << i;
      }
    }
  }
}

TEST(AugmentBatch, ZeroGradientAndSingletonBatchPassThrough) {
  Gen gen(17);
  const auto batch = random_batch(gen, 5, 4, 3);
  const LinearModel zero{Eigen::MatrixXd::Zero(4, 3)};
  for (auto mode : {AugMode::sea, AugMode::adv, AugMode::sea_neg}) {
    const auto out = augment_batch(batch.features, batch.labels, zero, {}, {mode, 0.4, 0.01, true}, {});
    EXPECT_EQ(out.rows, batch.features);
    EXPECT_EQ(out.skipped, 5U);
  }
  const RowMatrix one = batch.features.topRows(1);
  const std::vector<std::uint32_t> one_label{batch.labels[0]};
  for (auto mode : {AugMode::sea, AugMode::sea_neg, AugMode::rand, AugMode::mixup}) {
    const auto out = augment_batch(one, one_label, batch.model, {}, {mode, 0.4, 0.01, true}, {});
    EXPECT_EQ(out.rows, one);
    EXPECT_EQ(out.skipped, 1U);
  }
  const auto adv = augment_batch(one, one_label, batch.model, {}, {AugMode::adv, 0.4, 0.01, true}, {});
  EXPECT_EQ(adv.skipped, 0U);
}

TEST(AugmentBatch, WorkerCountDoesNotChangeResults) {
  Gen gen(18);
  const auto batch = random_batch(gen, 300, 16, 5);
  for (auto mode : {AugMode::sea, AugMode::adv, AugMode::sea_neg, AugMode::rand, AugMode::mixup}) {
    const AugmentationSpec spec{mode, 0.4, 0.01, true};
    const auto one = augment_batch(batch.features, batch.labels, batch.model, {}, spec, {1, 2, 3}, 1);
    const auto four = augment_batch(batch.features, batch.labels, batch.model, {}, spec, {1, 2, 3}, 4);
    EXPECT_EQ(one.rows, four.rows) << to_string(mode);
  }
}

}  // namespace
}  // namespace sea
