#include "mas/prior.hpp"

#include "mas/toy_priors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mas;

namespace {

GaussianMixturePriorD two_component_1d(double w0, double mu0, double v0, double mu1, double v1) {
  return GaussianMixturePriorD({{w0, VectorXd::Constant(1, mu0), v0}, {1.0 - w0, VectorXd::Constant(1, mu1), v1}});
}

// E[x0 | x_t] and Var[x0 | x_t] for a 1-D mixture by trapezoidal quadrature over x0.
std::pair<double, double> quadrature_posterior(const GaussianMixturePriorD& prior, double xt, double alpha,
                                               double sigma) {
  const double lo = -12.0, hi = 12.0;
  const int n = 200001;
  const double h = (hi - lo) / (n - 1);
  double z = 0, m1 = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x0 = lo + i * h;
    double p = 0;
    for (const auto& c : prior.components())
      p += c.weight * std::exp(-0.5 * (x0 - c.mean[0]) * (x0 - c.mean[0]) / c.variance) / std::sqrt(c.variance);
    const double lik = std::exp(-0.5 * (xt - alpha * x0) * (xt - alpha * x0) / (sigma * sigma));
    const double wgt = (i == 0 || i == n - 1 ? 0.5 : 1.0) * p * lik;
    z += wgt;
    m1 += wgt * x0;
    m2 += wgt * x0 * x0;
  }
  const double mean = m1 / z;
  return {mean, m2 / z - mean * mean};
}

}  // namespace

TEST(Prior, RejectsInvalidMixtures) {
  EXPECT_THROW(GaussianMixturePriorD({}), std::invalid_argument);
  EXPECT_THROW(GaussianMixturePriorD({{0.5, VectorXd::Zero(2), 1.0}}), std::invalid_argument);
  EXPECT_THROW(GaussianMixturePriorD({{1.0, VectorXd::Zero(2), 0.0}}), std::invalid_argument);
  EXPECT_THROW(GaussianMixturePriorD({{0.5, VectorXd::Zero(2), 1.0}, {0.5, VectorXd::Zero(3), 1.0}}), DimensionError);
}

TEST(Prior, SingleGaussianConditioningExample) {
  const auto prior = GaussianMixturePriorD::single(VectorXd::Zero(1), 1.0);
  const auto out = denoise(prior, VectorXd::Constant(1, 2.0), 1.0, 1.0);
  EXPECT_NEAR(out.mean[0], 1.0, 1e-15);
  EXPECT_NEAR(out.scalar_var, 0.5, 1e-15);
}

TEST(Prior, PointMassIgnoresInput) {
  VectorXd mu(3);
  mu << 0.1, -0.4, 0.9;
  const auto prior = GaussianMixturePriorD::single(mu, 1e-18);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto out = denoise(prior, mas::testing::random_vector(3, rng, 5.0), 0.7, 0.3);
    EXPECT_LT((out.mean - mu).norm(), 1e-12);
    EXPECT_LT(out.scalar_var, 1e-15);
  }
}

TEST(Prior, MidpointGivesEqualResponsibilities) {
  const auto prior = two_component_1d(0.5, -1.0, 0.2, 1.0, 0.2);
  const auto out = denoise(prior, VectorXd::Zero(1), 0.8, 0.5);
  EXPECT_NEAR(out.responsibilities[0], 0.5, 1e-15);
  EXPECT_NEAR(out.responsibilities[1], 0.5, 1e-15);
  EXPECT_NEAR(out.mean[0], 0.0, 1e-15);
}

TEST(Prior, RejectsNonPositiveSigma) {
  const auto prior = GaussianMixturePriorD::single(VectorXd::Zero(2), 1.0);
  EXPECT_THROW(denoise(prior, VectorXd::Zero(2), 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(denoise(prior, VectorXd::Zero(2), 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(denoise(prior, VectorXd::Zero(3), 1.0, 1.0), DimensionError);
}

TEST(Prior, SingleGaussianMatchesJointConditioning) {
  // Oracle: condition the explicit joint Gaussian of (x0, x_t) with a dense solve.
  std::mt19937_64 rng(3);
  const Index d = 4;
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd mu = mas::testing::random_vector(d, rng);
    const double tau2 = 0.1 + std::abs(mas::testing::random_vector(1, rng)[0]);
    const double alpha = 0.2 + 0.7 * std::abs(std::sin(trial + 1.0));
    const double sigma = std::sqrt(1 - alpha * alpha);
    const VectorXd xt = mas::testing::random_vector(d, rng);
    const MatrixXd cxx = tau2 * MatrixXd::Identity(d, d);
    const MatrixXd cxt = alpha * tau2 * MatrixXd::Identity(d, d);
    const MatrixXd ctt = (alpha * alpha * tau2 + sigma * sigma) * MatrixXd::Identity(d, d);
    const VectorXd mean = mu + cxt * ctt.ldlt().solve(xt - alpha * mu);
    const MatrixXd cov = cxx - cxt * ctt.ldlt().solve(cxt.transpose());
    const auto out = denoise(GaussianMixturePriorD::single(mu, tau2), xt, alpha, sigma);
    EXPECT_LT((out.mean - mean).norm(), 1e-10);
    EXPECT_NEAR(out.scalar_var, cov.trace() / double(d), 1e-12);
  }
}

TEST(Prior, MixtureMatchesQuadrature) {
  const auto prior = two_component_1d(0.3, -1.0, 0.05, 0.8, 0.2);
  for (double xt : {-1.5, -0.2, 0.0, 0.4, 1.3}) {
    for (double alpha : {0.3, 0.7, 0.95}) {
      const double sigma = std::sqrt(1 - alpha * alpha);
      const auto [mean, var] = quadrature_posterior(prior, xt, alpha, sigma);
      const auto out = denoise(prior, VectorXd::Constant(1, xt), alpha, sigma);
      EXPECT_NEAR(out.mean[0], mean, 1e-8) << "xt=" << xt << " alpha=" << alpha;
      EXPECT_NEAR(out.scalar_var, var, 1e-8) << "xt=" << xt << " alpha=" << alpha;
    }
  }
}

TEST(Prior, ResponsibilitiesStayFiniteFarFromComponents) {
  const auto prior = two_component_1d(0.5, -1.0, 1e-4, 1.0, 1e-4);
  const auto out = denoise(prior, VectorXd::Constant(1, 400.0), 0.999, 1e-3);
  EXPECT_TRUE(out.mean.allFinite());
  EXPECT_TRUE(out.responsibilities.allFinite());
  EXPECT_NEAR(out.responsibilities.sum(), 1.0, 1e-12);
  EXPECT_GE(out.responsibilities.minCoeff(), 0.0);
  // All weight on the +1 component, whose Gaussian posterior extrapolates linearly.
  const double v = 0.999 * 0.999 * 1e-4 + 1e-6;
  EXPECT_NEAR(out.responsibilities[1], 1.0, 1e-12);
  EXPECT_NEAR(out.mean[0], 1.0 + 0.999 * 1e-4 / v * (400.0 - 0.999), 1e-9);
}

TEST(Prior, SmallSigmaApproachesRescaledInput) {
  // |mean - x_t / alpha| = O(sigma^2): halving sigma shrinks the gap about 4x.
  const auto prior = two_component_1d(0.5, -0.5, 0.3, 0.6, 0.4);
  const double xt = 0.2;
  auto gap = [&](double sigma) {
    const double alpha = std::sqrt(1 - sigma * sigma);
    return std::abs(denoise(prior, VectorXd::Constant(1, xt), alpha, sigma).mean[0] - xt / alpha);
  };
  const double ratio = gap(0.02) / gap(0.01);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(Prior, SamplePointMassAndDegenerateWeights) {
  std::mt19937_64 rng(4);
  VectorXd mu(2);
  mu << 0.25, 0.75;
  const auto point = GaussianMixturePriorD::single(mu, 1e-300);
  EXPECT_LT((sample_prior(point, rng) - mu).norm(), 1e-140);

  const auto first = GaussianMixturePriorD({{1.0, VectorXd::Constant(1, -5.0), 1e-300},
                                            {0.0, VectorXd::Constant(1, 5.0), 1e-300}});
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(sample_prior(first, rng)[0], -5.0, 1e-100);
}

TEST(Prior, SampleMeanLawOfLargeNumbers) {
  const auto prior = GaussianMixturePriorD({{0.4, VectorXd::Constant(2, -1.0), 0.09}, {0.6, VectorXd::Constant(2, 2.0), 0.09}});
  std::mt19937_64 rng(5);
  const int n = 100000;
  VectorXd sum = VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) sum += sample_prior(prior, rng);
  const VectorXd emp = sum / n;
  const double total_std = std::sqrt(prior.covariance()(0, 0));
  // Four standard errors of the full mixture spread.
  EXPECT_LT((emp - prior.mean()).cwiseAbs().maxCoeff(), 4 * total_std / std::sqrt(double(n)));
}

TEST(Prior, ExactPosteriorSimpleCases) {
  VectorXd mu(3), y(3);
  mu << 0.0, 1.0, -2.0;
  y << 1.0, 0.0, 2.0;
  const auto prior = GaussianMixturePriorD::single(mu, 0.25);
  const auto eq = exact_linear_posterior(prior, build_identity(3), y, 0.5);
  EXPECT_LT((eq.mean - (mu + y) / 2).norm(), 1e-14);
  const auto wide = exact_linear_posterior(prior, build_identity(3), y, 1e8);
  EXPECT_LT((wide.mean - mu).norm(), 1e-12);
  const auto mix = GaussianMixturePriorD({{0.5, mu, 1.0}, {0.5, y, 1.0}});
  EXPECT_THROW(exact_linear_posterior(mix, build_identity(3), y, 0.5), std::invalid_argument);
}

TEST(Prior, ExactPosteriorMatchesDenseBayes) {
  std::mt19937_64 rng(6);
  const MatrixXd h = mas::testing::random_matrix(3, 5, rng);
  const VectorXd mu = mas::testing::random_vector(5, rng);
  const VectorXd y = mas::testing::random_vector(3, rng);
  const double tau2 = 0.7, sy = 0.4;
  const auto op = build_dense(h);
  const auto post = exact_linear_posterior(GaussianMixturePriorD::single(mu, tau2), op, y, sy);

  const MatrixXd cinv = MatrixXd::Identity(5, 5) / tau2;
  const MatrixXd rinv = MatrixXd::Identity(3, 3) / (sy * sy);
  const MatrixXd prec = cinv + h.transpose() * rinv * h;
  const VectorXd mean = prec.ldlt().solve(cinv * mu + h.transpose() * rinv * y);
  const MatrixXd cov = prec.inverse();
  EXPECT_LT((post.mean - mean).norm(), 1e-9);

  MatrixXd cov_got(5, 5);
  for (Index j = 0; j < 5; ++j) {
    VectorXd e = VectorXd::Zero(5);
    e[j] = 1;
    cov_got.col(j) = op.V(post.cov_diag_in_v.cwiseProduct(op.Vt(e)));
  }
  EXPECT_LT((cov_got - cov).norm(), 1e-9);
}

TEST(ToyPriors, TemplatesAreDeterministicAndBounded) {
  const ImageShape s{3, 16, 16};
  const auto a = make_templates(s, 4, 9);
  const auto b = make_templates(s, 4, 9);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].data, b[i].data);
    EXPECT_GE(a[i].data.minCoeff(), 0.05);
    EXPECT_LE(a[i].data.maxCoeff(), 0.95);
  }
  EXPECT_NE(a[0].data, a[1].data);
  const auto prior = template_bank_prior(s, 4, 0.05, 9);
  EXPECT_EQ(prior.size(), 4u);
  EXPECT_EQ(prior.dim(), s.size());
  EXPECT_NEAR(prior.components()[2].variance, 0.0025, 1e-15);
}
