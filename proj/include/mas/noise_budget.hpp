#pragma once

// Noise bookkeeping for the reverse step x_{t-dt} = a x0* + b x_t + noise.
//
// Known Gaussian measurement noise leaks into V-mode i of x0* with std
// tau_i = a sigma_y s_i / ((eta1 + 1) s_i^2 + eta2). The budget damps the
// measurement term by lambda_i (as close to 1 as possible) and tops the
// sampler noise up by gamma_i so that (tau_i lambda_i)^2 + gamma_i = c^2.
//
// For unknown noise the leakage cannot be budgeted; eta2 = k a / c keeps the
// measurement trusted early (a ~ 0) and increasingly damped late.

#include "mas/mas_core.hpp"
#include "mas/spectral_ops.hpp"

#include <random>

namespace mas {

template <typename Scalar>
struct ModeBudget {
  Vector<Scalar> lambdas;  // per V-mode, in (0, 1]
  Vector<Scalar> gammas;   // per V-mode noise variance
};

template <typename Scalar>
struct NoisePolicy {
  enum class Kind { noise_free, known_gaussian, unknown };

  Kind kind = Kind::noise_free;
  Scalar sigma_y = 0;
  Scalar inflation = Scalar(1.2);
  Scalar k = 0;
  Scalar eta1_base = 0;

  static NoisePolicy noise_free() { return {}; }
  static NoisePolicy known_gaussian(Scalar sigma_y, Scalar inflation = Scalar(1.2)) {
    NoisePolicy p;
    p.kind = Kind::known_gaussian;
    p.sigma_y = sigma_y;
    p.inflation = inflation;
    p.validate();
    return p;
  }
  static NoisePolicy unknown(Scalar k, Scalar eta1_base = 0) {
    NoisePolicy p;
    p.kind = Kind::unknown;
    p.k = k;
    p.eta1_base = eta1_base;
    p.validate();
    return p;
  }

  Scalar sigma_y_eff() const { return inflation * sigma_y; }

  void validate() const {
    if (!(sigma_y >= Scalar(0))) throw std::invalid_argument("NoisePolicy: sigma_y must be >= 0");
    if (!(inflation >= Scalar(1))) throw std::invalid_argument("NoisePolicy: inflation must be >= 1");
    if (!(k >= Scalar(0))) throw std::invalid_argument("NoisePolicy: k must be >= 0");
    if (!(eta1_base >= Scalar(-0.4) && eta1_base <= Scalar(0.1)))
      throw std::invalid_argument("NoisePolicy: eta1_base must lie in [-0.4, 0.1]");
  }
};

using NoisePolicyD = NoisePolicy<double>;

template <typename Scalar>
ModeBudget<Scalar> known_gaussian_budget(const SpectralOperator<Scalar>& op, const MasWeights<Scalar>& w, Scalar a_t,
                                         Scalar c_t, Scalar sigma_y_eff) {
  w.validate();
  if (!(a_t >= Scalar(0)) || !(c_t >= Scalar(0)) || !(sigma_y_eff >= Scalar(0)))
    throw std::invalid_argument("known_gaussian_budget: a_t, c_t and sigma_y must be >= 0");
  const Index d = op.in_dim();
  ModeBudget<Scalar> b{Vector<Scalar>::Ones(d), Vector<Scalar>::Constant(d, c_t * c_t)};
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s = op.singulars()[i];
    const Scalar den = (w.eta1 + Scalar(1)) * s * s + w.eta2;
    if (!(den > Scalar(0))) throw InstabilityError("known_gaussian_budget: (eta1 + 1) s^2 + eta2 <= 0", i);
    const Scalar tau = a_t * sigma_y_eff * s / den;
    if (c_t >= tau) {
      b.gammas[i] = c_t * c_t - tau * tau;
    } else {
      b.lambdas[i] = c_t * den / (a_t * sigma_y_eff * s);
      b.gammas[i] = Scalar(0);
    }
  }
  return b;
}

template <typename Scalar>
struct BudgetedMean {
  Vector<Scalar> x0_star;
  Vector<Scalar> gammas;  // covariance of the extra noise is V diag(gammas) V^T
};

/// x0* = m + Sigma [(Y^-1 - I) m + Y^-1 H^T W^-1 y] with Sigma = V diag(lambda) V^T.
template <typename Scalar, typename D1, typename D2>
BudgetedMean<Scalar> apply_budget(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<D1>& m0t,
                                  const Eigen::MatrixBase<D2>& y, const MasWeights<Scalar>& w,
                                  const ModeBudget<Scalar>& budget) {
  w.validate();
  check_length("apply_budget m0t", op.in_dim(), m0t.size());
  check_length("apply_budget y", op.out_dim(), y.size());
  check_length("apply_budget lambdas", op.in_dim(), budget.lambdas.size());
  check_length("apply_budget gammas", op.in_dim(), budget.gammas.size());
  const Vector<Scalar> m = m0t.template cast<Scalar>();
  const Vector<Scalar> mv = op.Vt(m);
  const Vector<Scalar> z = op.Ut(y.template cast<Scalar>().eval());
  Vector<Scalar> delta = Vector<Scalar>::Zero(op.in_dim());
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s = op.singulars()[i];
    const Scalar den = (w.eta1 + Scalar(1)) * s * s + w.eta2;
    if (!(den > Scalar(0))) throw InstabilityError("apply_budget: (eta1 + 1) s^2 + eta2 <= 0", i);
    delta[i] = budget.lambdas[i] * s * (z[i] - s * mv[i]) / den;
  }
  return {m + op.V(delta), budget.gammas};
}

/// eta1 = eta1_base, eta2 = k a_t / c_t.
template <typename Scalar>
MasWeights<Scalar> unknown_noise_weights(const NoisePolicy<Scalar>& policy, Scalar a_t, Scalar c_t) {
  if (policy.kind != NoisePolicy<Scalar>::Kind::unknown)
    throw std::invalid_argument("unknown_noise_weights: policy is not the unknown-noise policy");
  if (!(c_t > Scalar(0))) throw std::invalid_argument("unknown_noise_weights: c_t must be positive");
  const Scalar eta2 = a_t == Scalar(0) ? Scalar(0) : policy.k * a_t / c_t;
  return {policy.eta1_base, eta2, false};
}

/// Draws V diag(sqrt(gamma)) xi with xi standard normal.
template <typename Scalar, typename Rng>
Vector<Scalar> draw_colored_noise(const SpectralOperator<Scalar>& op, const Vector<Scalar>& gammas, Rng& rng) {
  check_length("draw_colored_noise", op.in_dim(), gammas.size());
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Vector<Scalar> xi(op.in_dim());
  for (Index i = 0; i < xi.size(); ++i) xi[i] = std::sqrt(std::max(gammas[i], Scalar(0))) * normal(rng);
  return op.V(xi);
}

}  // namespace mas
