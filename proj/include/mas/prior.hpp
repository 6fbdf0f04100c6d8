#pragma once

// Analytic Gaussian-mixture prior with isotropic components. Under the
// noising kernel x_t = alpha * x0 + sigma * noise every quantity the sampler
// needs (E[x0 | x_t] and the posterior covariance trace) is closed form.

#include "mas/spectral_ops.hpp"
#include "mas/types.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

namespace mas {

template <typename Scalar>
struct GaussianComponent {
  Scalar weight;
  Vector<Scalar> mean;
  Scalar variance;  // isotropic tau^2
};

template <typename Scalar>
class GaussianMixturePrior {
 public:
  using Vec = Vector<Scalar>;

  explicit GaussianMixturePrior(std::vector<GaussianComponent<Scalar>> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("GaussianMixturePrior: no components");
    dim_ = components_.front().mean.size();
    Scalar total = 0;
    for (const auto& c : components_) {
      check_length("GaussianMixturePrior mean", dim_, c.mean.size());
      if (!(c.weight >= Scalar(0))) throw std::invalid_argument("GaussianMixturePrior: negative weight");
      if (!(c.variance > Scalar(0))) throw std::invalid_argument("GaussianMixturePrior: variance must be positive");
      if (!c.mean.allFinite()) throw std::invalid_argument("GaussianMixturePrior: non-finite mean");
      total += c.weight;
    }
    if (std::abs(total - Scalar(1)) > Scalar(1e-12))
      throw std::invalid_argument("GaussianMixturePrior: weights must sum to 1");
  }

  static GaussianMixturePrior single(Vec mean, Scalar variance) {
    return GaussianMixturePrior({{Scalar(1), std::move(mean), variance}});
  }

  Index dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<GaussianComponent<Scalar>>& components() const { return components_; }

  Vec mean() const {
    Vec m = Vec::Zero(dim_);
    for (const auto& c : components_) m += c.weight * c.mean;
    return m;
  }

  Matrix<Scalar> covariance() const {
    const Vec mu = mean();
    Matrix<Scalar> cov = Matrix<Scalar>::Zero(dim_, dim_);
    for (const auto& c : components_) {
      const Vec dm = c.mean - mu;
      cov += c.weight * (dm * dm.transpose());
      cov.diagonal().array() += c.weight * c.variance;
    }
    return cov;
  }

 private:
  std::vector<GaussianComponent<Scalar>> components_;
  Index dim_ = 0;
};

using GaussianMixturePriorD = GaussianMixturePrior<double>;

template <typename Scalar>
struct DenoiserOutput {
  Vector<Scalar> mean;        // E[x0 | x_t]
  Scalar scalar_var;          // trace(Cov[x0 | x_t]) / d
  Vector<Scalar> responsibilities;
};

/// Exact posterior mean and scalar variance of x0 given x_t.
template <typename Scalar, typename Derived>
DenoiserOutput<Scalar> denoise(const GaussianMixturePrior<Scalar>& prior, const Eigen::MatrixBase<Derived>& x_t,
                               Scalar alpha_t, Scalar sigma_t) {
  if (!(sigma_t > Scalar(0))) throw std::invalid_argument("denoise: sigma_t must be positive");
  if (!(alpha_t > Scalar(0))) throw std::invalid_argument("denoise: alpha_t must be positive");
  check_length("denoise", prior.dim(), x_t.size());
  const Index d = prior.dim();
  const auto& comps = prior.components();
  const std::size_t k = comps.size();

  // Log-domain responsibilities with max subtraction.
  Vector<Scalar> logw(static_cast<Index>(k));
  std::vector<Vector<Scalar>> post_means(k);
  Vector<Scalar> post_vars(static_cast<Index>(k));
  const Scalar s2 = sigma_t * sigma_t;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& c = comps[j];
    const Scalar v = alpha_t * alpha_t * c.variance + s2;
    const Vector<Scalar> resid = x_t - alpha_t * c.mean;
    logw[Index(j)] = c.weight > Scalar(0)
                         ? std::log(c.weight) - Scalar(0.5) * Scalar(d) * std::log(v) - resid.squaredNorm() / (2 * v)
                         : -std::numeric_limits<Scalar>::infinity();
    post_means[j] = c.mean + (alpha_t * c.variance / v) * resid;
    post_vars[Index(j)] = c.variance * s2 / v;
  }
  const Scalar top = logw.maxCoeff();
  Vector<Scalar> resp = (logw.array() - top).exp().matrix();
  resp /= resp.sum();

  DenoiserOutput<Scalar> out;
  out.mean = Vector<Scalar>::Zero(d);
  Scalar second = 0;
  Scalar within = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const Scalar r = resp[Index(j)];
    if (r == Scalar(0)) continue;
    out.mean += r * post_means[j];
    second += r * post_means[j].squaredNorm();
    within += r * post_vars[Index(j)];
  }
  out.scalar_var = std::max(Scalar(0), within + (second - out.mean.squaredNorm()) / Scalar(d));
  out.responsibilities = std::move(resp);
  return out;
}

template <typename Scalar, typename Rng>
Vector<Scalar> sample_prior(const GaussianMixturePrior<Scalar>& prior, Rng& rng) {
  std::vector<Scalar> weights;
  for (const auto& c : prior.components()) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const auto& c = prior.components()[pick(rng)];
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  const Scalar tau = std::sqrt(c.variance);
  Vector<Scalar> x = c.mean;
  for (Index i = 0; i < x.size(); ++i) x[i] += tau * normal(rng);
  return x;
}

template <typename Scalar>
struct LinearPosterior {
  Vector<Scalar> mean;
  Vector<Scalar> cov_diag_in_v;  // posterior covariance is V diag(.) V^T
};

/// Exact x0 | y for a single Gaussian prior and y = H x0 + N(0, sigma_y^2 I).
template <typename Scalar, typename Derived>
LinearPosterior<Scalar> exact_linear_posterior(const GaussianMixturePrior<Scalar>& prior,
                                               const SpectralOperator<Scalar>& op,
                                               const Eigen::MatrixBase<Derived>& y, Scalar sigma_y) {
  if (prior.size() != 1)
    throw std::invalid_argument("exact_linear_posterior: the posterior of a mixture prior is itself a mixture");
  if (!(sigma_y > Scalar(0))) throw std::invalid_argument("exact_linear_posterior: sigma_y must be positive");
  check_length("exact_linear_posterior prior", op.in_dim(), prior.dim());
  check_length("exact_linear_posterior y", op.out_dim(), y.size());
  const auto& c = prior.components().front();
  const Scalar tau2 = c.variance;
  const Scalar sy2 = sigma_y * sigma_y;

  const Vector<Scalar> z = op.Ut((y - apply(op, c.mean)).eval());
  Vector<Scalar> shift = Vector<Scalar>::Zero(op.in_dim());
  Vector<Scalar> cov = Vector<Scalar>::Constant(op.in_dim(), tau2);
  for (Index i = 0; i < op.mode_count(); ++i) {
    const Scalar s = op.singulars()[i];
    shift[i] = tau2 * s * z[i] / (tau2 * s * s + sy2);
    cov[i] = tau2 * sy2 / (tau2 * s * s + sy2);
  }
  return {c.mean + op.V(shift), std::move(cov)};
}

}  // namespace mas
