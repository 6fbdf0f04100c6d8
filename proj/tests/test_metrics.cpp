#include "mas/metrics.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mas;

namespace {

Image constant(Index c, Index h, Index w, double v) { return Image(c, h, w, VectorXd::Constant(c * h * w, v)); }

Image random_image(Index c, Index h, Index w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd v(c * h * w);
  for (Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return Image(c, h, w, v);
}

}  // namespace

TEST(Psnr, IdenticalIsFlagged) {
  const Image a = random_image(1, 12, 12, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_TRUE(evaluate(a, a).identical);
}

TEST(Psnr, DefinitionValues) {
  const Image a = constant(1, 4, 4, 0.5);
  EXPECT_NEAR(psnr(a, constant(1, 4, 4, 0.6)), 20.0, 1e-12);   // MSE 0.01
  EXPECT_NEAR(psnr(a, constant(1, 4, 4, 0.51)), 40.0, 1e-10);  // MSE 0.0001
}

TEST(Psnr, ShiftDetecting) {
  const Image a = random_image(3, 8, 8, 2);
  for (double delta : {0.003, 0.05, 0.2}) {
    Image b = a;
    b.data.array() += delta;
    EXPECT_NEAR(psnr(a, b), 10 * std::log10(1 / (delta * delta)), 1e-9);
  }
}

TEST(Psnr, ShapeMismatch) {
  EXPECT_THROW(psnr(constant(1, 4, 4, 0), constant(1, 4, 5, 0)), std::invalid_argument);
}

TEST(Ssim, EqualInputsGiveOne) {
  const Image a = random_image(3, 16, 20, 3);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, ConstantPatchClosedForm) {
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const double expected = (2 * 0 * 1 + c1) * (2 * 0 + c2) / ((0 + 1 + c1) * (0 + 0 + c2));
  EXPECT_NEAR(ssim(constant(1, 16, 16, 0.0), constant(1, 16, 16, 1.0)), expected, 1e-12);
}

TEST(Ssim, SymmetricAndBounded) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image a = random_image(1, 16, 16, 10 + s);
    const Image b = random_image(1, 16, 16, 20 + s);
    Image neg = a;
    neg.data = VectorXd::Ones(neg.size()) - a.data;
    const double ab = ssim(a, b);
    EXPECT_NEAR(ab, ssim(b, a), 1e-14);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
    const double an = ssim(a, neg);
    EXPECT_GE(an, -1.0);
    EXPECT_LT(an, 0.0);
  }
}

TEST(Ssim, WindowGuard) {
  EXPECT_THROW(ssim(constant(1, 10, 16, 0), constant(1, 10, 16, 0)), std::invalid_argument);
  EXPECT_NO_THROW(ssim(constant(1, 11, 11, 0), constant(1, 11, 11, 0)));
}

TEST(Ssim, GaussianWindowNormalized) {
  const VectorXd w = detail::gaussian_window<double>(11, 1.5);
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  EXPECT_NEAR(w[0], w[10], 1e-17);
  EXPECT_EQ(w.maxCoeff(), w[5]);
}

TEST(Ssim, ValidFilterMatchesDirectSum) {
  std::mt19937_64 rng(4);
  const MatrixXd p = mas::testing::random_matrix(14, 13, rng);
  const VectorXd k = detail::gaussian_window<double>(5, 1.5);
  const MatrixXd got = detail::filter_valid(p, k);
  ASSERT_EQ(got.rows(), 10);
  ASSERT_EQ(got.cols(), 9);
  for (Index r = 0; r < 10; ++r)
    for (Index c = 0; c < 9; ++c) {
      double acc = 0;
      for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) acc += k[i] * k[j] * p(r + i, c + j);
      EXPECT_NEAR(got(r, c), acc, 1e-13);
    }
}
