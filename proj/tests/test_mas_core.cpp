#include "mas/mas_core.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mas;
using mas::testing::random_matrix;
using mas::testing::random_vector;

namespace {

VectorXd scalar(double v) { return VectorXd::Constant(1, v); }

}  // namespace

TEST(MasCore, IdentityHandValues) {
  const auto op = build_identity(1);
  EXPECT_NEAR(mas_posterior_mean(op, scalar(0), scalar(1), MasWeightsD{0, 1})[0], 0.5, 1e-15);
  EXPECT_NEAR(mas_posterior_mean(op, scalar(0), scalar(1), MasWeightsD{-0.5, 0})[0], 2.0, 1e-15);
  // m + (y - m) / (eta1 + eta2 + 1)
  EXPECT_NEAR(mas_posterior_mean(op, scalar(0.3), scalar(0.9), MasWeightsD{0.4, 0.6})[0], 0.3 + 0.6 / 2.0, 1e-15);
}

TEST(MasCore, ZeroWeightsReturnMeasurementOnIdentity) {
  std::mt19937_64 rng(1);
  const auto op = build_identity(5);
  const VectorXd m = random_vector(5, rng), y = random_vector(5, rng);
  EXPECT_EQ(mas_posterior_mean(op, m, y, MasWeightsD{0, 0}), y);
}

TEST(MasCore, InstabilityNamesMode) {
  const auto op = build_identity(3);
  try {
    mas_posterior_mean(op, VectorXd::Zero(3), VectorXd::Ones(3), MasWeightsD{-1.5, 0});
    FAIL();
  } catch (const InstabilityError& e) {
    EXPECT_EQ(e.mode(), 0);
  }
  EXPECT_THROW(mas_posterior_mean(op, VectorXd::Zero(3), VectorXd::Ones(3), MasWeightsD{0, -0.5}),
               std::invalid_argument);
  EXPECT_NO_THROW(mas_posterior_mean(op, VectorXd::Zero(3), VectorXd::Ones(3), MasWeightsD{0, -0.5, true}));
}

TEST(MasCore, MatchesDenseOracle) {
  std::mt19937_64 rng(2);
  const MatrixXd h = random_matrix(4, 6, rng);
  const auto op = build_dense(h);
  const VectorXd m = random_vector(6, rng), y = random_vector(4, rng);
  const MasWeightsD w{0.3, 0.2};
  EXPECT_LT((mas_posterior_mean(op, m, y, w) - dense_posterior_mean(h, m, y, w)).norm(), 1e-9);
  EXPECT_LT((listing_posterior_mean(op, m, y, w) - dense_posterior_mean(h, m, y, w)).norm(), 1e-9);
}

TEST(MasCore, DenseOracleHandValue) {
  const MatrixXd h = MatrixXd::Identity(2, 2);
  VectorXd m(2), y(2);
  m << 0.0, 1.0;
  y << 1.0, 3.0;
  const VectorXd got = dense_posterior_mean(h, m, y, MasWeightsD{0.5, 0.5});
  EXPECT_NEAR(got[0], 0.5, 1e-14);
  EXPECT_NEAR(got[1], 2.0, 1e-14);
  EXPECT_THROW(dense_posterior_mean(h, m, y, MasWeightsD{0, 0}), InstabilityError);
  EXPECT_THROW(dense_posterior_mean(MatrixXd(MatrixXd::Zero(2, 600)), VectorXd::Zero(600), y, MasWeightsD{1, 1}),
               std::invalid_argument);
}

TEST(MasCore, ListingPathMatchesCombinedFormulaAwayFromCancellation) {
  std::mt19937_64 rng(3);
  for (const auto& c : mas::testing::small_catalog()) {
    SCOPED_TRACE(c.name);
    const VectorXd m = random_vector(c.op.in_dim(), rng), y = random_vector(c.op.out_dim(), rng);
    for (const MasWeightsD w : {MasWeightsD{0.3, 0.1}, MasWeightsD{-0.3, 0.05}, MasWeightsD{2.0, 0.0}}) {
      const VectorXd a = mas_posterior_mean(c.op, m, y, w);
      const VectorXd b = listing_posterior_mean(c.op, m, y, w);
      EXPECT_LT((a - b).norm(), 1e-9 * (1 + a.norm()));
    }
  }
}

TEST(MasCore, DdnmExamples) {
  std::mt19937_64 rng(4);
  const VectorXd m = random_vector(4, rng), y = random_vector(4, rng);
  EXPECT_LT((ddnm_projection(build_identity(4), m, y) - y).norm(), 1e-15);

  VectorXd mm(2);
  mm << 0.4, 0.6;
  const VectorXd got = ddnm_projection(build_mask({true, false}), mm, scalar(0.9));
  EXPECT_DOUBLE_EQ(got[0], 0.9);
  EXPECT_DOUBLE_EQ(got[1], 0.6);

  // Full row rank: H H^dagger = I, checked against the explicit matrix.
  const MatrixXd h = random_matrix(4, 7, rng);
  const auto op = build_dense(h);
  const VectorXd m7 = random_vector(7, rng);
  EXPECT_LT((h * ddnm_projection(op, m7, y) - y).norm(), 1e-9);
}

TEST(MasCore, ZeroWeightsGiveDdnmOnEveryOperator) {
  std::mt19937_64 rng(5);
  for (const auto& c : mas::testing::small_catalog()) {
    SCOPED_TRACE(c.name);
    const VectorXd m = random_vector(c.op.in_dim(), rng), y = random_vector(c.op.out_dim(), rng);
    const VectorXd a = mas_posterior_mean(c.op, m, y, MasWeightsD{0, 0});
    EXPECT_LT((a - ddnm_projection(c.op, m, y)).norm(), 1e-10 * (1 + a.norm()));
  }
}

TEST(MasCore, TmpdScalarExamples) {
  std::mt19937_64 rng(6);
  const VectorXd m = random_vector(3, rng), y = random_vector(3, rng);
  const auto op = build_identity(3);
  EXPECT_LT((tmpd_scalar_posterior_mean(op, m, 0.5, y, 0.0) - y).norm(), 1e-14);
  EXPECT_LT((tmpd_scalar_posterior_mean(op, m, 0.5, y, 1e9) - m).norm(), 1e-12);
  EXPECT_THROW(tmpd_scalar_posterior_mean(op, m, 0.0, y, 0.1), std::invalid_argument);
  const double r2 = 0.3, sy = 0.2;
  const VectorXd a = tmpd_scalar_posterior_mean(op, m, r2, y, sy);
  const VectorXd b = mas_posterior_mean(op, m, y, MasWeightsD{0, sy * sy / r2});
  EXPECT_LT((a - b).norm(), 1e-12);
}

TEST(MasCore, NullSpaceComponentIsPreserved) {
  std::mt19937_64 rng(7);
  for (const auto& c : mas::testing::small_catalog()) {
    SCOPED_TRACE(c.name);
    const VectorXd m = random_vector(c.op.in_dim(), rng), y = random_vector(c.op.out_dim(), rng);
    const VectorXd x = mas_posterior_mean(c.op, m, y, MasWeightsD{0.7, 0.3});
    const VectorXd null_x = x - row_space_projection(c.op, x);
    const VectorXd null_m = m - row_space_projection(c.op, m);
    EXPECT_LT((null_x - null_m).norm(), 1e-10 * (1 + m.norm()));
  }
}

TEST(MasCore, MeasurementGainDecreasesInEtas) {
  for (double s : {0.1, 0.5, 1.0}) {
    double prev = measurement_gain(s, MasWeightsD{0.0, 0.1});
    for (double e1 : {0.1, 0.5, 2.0, 10.0}) {
      const double g = measurement_gain(s, MasWeightsD{e1, 0.1});
      EXPECT_LT(g, prev);
      prev = g;
    }
    prev = measurement_gain(s, MasWeightsD{0.2, 0.0});
    for (double e2 : {0.01, 0.1, 1.0}) {
      const double g = measurement_gain(s, MasWeightsD{0.2, e2});
      EXPECT_LT(g, prev);
      prev = g;
    }
  }
}

TEST(MasCore, NearCancellationGuard) {
  const auto op = build_identity(2);
  EXPECT_TRUE(near_cancellation_modes(op, MasWeightsD{0, 0}).empty());
  EXPECT_EQ(near_cancellation_modes(op, MasWeightsD{-0.2, 0.2}).size(), 2u);
  EXPECT_TRUE(near_cancellation_modes(op, MasWeightsD{-0.2, 0.1}).empty());
}

TEST(MasCore, LargeEta1ApproachesPriorMean) {
  std::mt19937_64 rng(8);
  const auto op = build_dense(random_matrix(3, 5, rng));
  const VectorXd m = random_vector(5, rng), y = random_vector(3, rng);
  EXPECT_LT((mas_posterior_mean(op, m, y, MasWeightsD{1e9, 0}) - m).norm(), 1e-6);
}
