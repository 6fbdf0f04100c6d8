#pragma once

// Reverse-diffusion loop x_{n-1} = a_n x0* + b_n x_n + noise with a pluggable
// rule for x0* (plain denoiser, DDNM, scalar-covariance TMPD, MAS with or
// without a noise budget, MAS with the unknown-noise eta schedule).

#include "mas/mas_core.hpp"
#include "mas/noise_budget.hpp"
#include "mas/prior.hpp"
#include "mas/spectral_ops.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mas {

template <typename Scalar>
struct DiffusionSchedule {
  enum class Variant { simple_ancestral, ddim };

  Vector<Scalar> alpha;  // index n = 0..N, alpha[0] = 1
  Vector<Scalar> sigma;  // sigma[0] = 0
  Variant variant = Variant::simple_ancestral;
  Scalar ddim_eta = 0;
  bool variance_preserving = true;

  Index steps() const { return alpha.size() - 1; }

  void validate() const {
    if (alpha.size() < 2 || alpha.size() != sigma.size())
      throw std::invalid_argument("DiffusionSchedule: need matching alpha/sigma tables with N >= 1");
    if (alpha[0] != Scalar(1) || sigma[0] != Scalar(0))
      throw std::invalid_argument("DiffusionSchedule: requires alpha_0 = 1 and sigma_0 = 0");
    for (Index n = 1; n < alpha.size(); ++n) {
      if (!(alpha[n] > Scalar(0) && alpha[n] <= Scalar(1)))
        throw std::invalid_argument("DiffusionSchedule: alpha_n must lie in (0, 1]");
      if (!(sigma[n] > Scalar(0))) throw std::invalid_argument("DiffusionSchedule: sigma_n must be positive for n >= 1");
      if (alpha[n] > alpha[n - 1] || sigma[n] < sigma[n - 1])
        throw std::invalid_argument("DiffusionSchedule: alpha must decrease and sigma increase with n");
      if (variance_preserving &&
          std::abs(alpha[n] * alpha[n] + sigma[n] * sigma[n] - Scalar(1)) > Scalar(1e-9))
        throw std::invalid_argument("DiffusionSchedule: alpha^2 + sigma^2 != 1 on a VP schedule");
    }
    if (variant == Variant::ddim && !(ddim_eta >= Scalar(0) && ddim_eta <= Scalar(1)))
      throw std::invalid_argument("DiffusionSchedule: DDIM eta must lie in [0, 1]");
  }

  /// VP schedule from the linear-beta DDPM chain (T = 1000, beta in [1e-4, 0.02])
  /// sub-sampled at t_n = (n - 1) * T / N.
  static DiffusionSchedule linear_beta(Index steps, Variant variant = Variant::simple_ancestral, Scalar eta = 0,
                                       Index train_steps = 1000, Scalar beta_start = Scalar(1e-4),
                                       Scalar beta_end = Scalar(0.02)) {
    if (steps < 1 || steps > train_steps) throw std::invalid_argument("linear_beta: steps must be in [1, T]");
    std::vector<Scalar> alpha_bar(static_cast<std::size_t>(train_steps));
    Scalar prod = 1;
    for (Index t = 0; t < train_steps; ++t) {
      const Scalar beta = beta_start + (beta_end - beta_start) * Scalar(t) / Scalar(train_steps - 1);
      prod *= Scalar(1) - beta;
      alpha_bar[std::size_t(t)] = prod;
    }
    DiffusionSchedule s;
    s.alpha.resize(steps + 1);
    s.sigma.resize(steps + 1);
    s.alpha[0] = 1;
    s.sigma[0] = 0;
    for (Index n = 1; n <= steps; ++n) {
      const Index t = (n - 1) * train_steps / steps;
      s.alpha[n] = std::sqrt(alpha_bar[std::size_t(t)]);
      s.sigma[n] = std::sqrt(Scalar(1) - alpha_bar[std::size_t(t)]);
    }
    s.variant = variant;
    s.ddim_eta = eta;
    s.validate();
    return s;
  }
};

using DiffusionScheduleD = DiffusionSchedule<double>;

template <typename Scalar>
struct StepCoeffs {
  Scalar a;
  Scalar b;
  Scalar c;  // standard deviation of the fresh noise
};

template <typename Scalar>
StepCoeffs<Scalar> step_coeffs(const DiffusionSchedule<Scalar>& sched, Index n) {
  if (n < 1 || n > sched.steps())
    throw std::out_of_range("step_coeffs: step " + std::to_string(n) + " outside [1, " +
                            std::to_string(sched.steps()) + "]");
  const Scalar a_prev = sched.alpha[n - 1];
  const Scalar s_prev = sched.sigma[n - 1];
  if (sched.variant == DiffusionSchedule<Scalar>::Variant::simple_ancestral) return {a_prev, Scalar(0), s_prev};
  const Scalar a_n = sched.alpha[n];
  const Scalar s_n = sched.sigma[n];
  const Scalar ratio = a_n * s_prev / a_prev;
  const Scalar c = sched.ddim_eta * s_prev / s_n * std::sqrt(std::max(Scalar(0), s_n * s_n - ratio * ratio));
  const Scalar b = std::sqrt(std::max(Scalar(0), s_prev * s_prev - c * c)) / s_n;
  return {a_prev - b * a_n, b, c};
}

enum class Rt2Mode { ratio, tweedie_scalar };

/// r_t^2 for the scalar prior covariance C = r_t^2 I.
template <typename Scalar>
Scalar rt2_policy(const DiffusionSchedule<Scalar>& sched, Index n, Rt2Mode mode,
                  const DenoiserOutput<Scalar>* denoised = nullptr) {
  if (n < 1 || n > sched.steps()) throw std::out_of_range("rt2_policy: step out of range");
  if (mode == Rt2Mode::ratio) return sched.sigma[n] * sched.sigma[n] / (sched.alpha[n] * sched.alpha[n]);
  if (!denoised) throw std::invalid_argument("rt2_policy: tweedie_scalar needs the denoiser output");
  return denoised->scalar_var;
}

enum class MethodKind { unconditional, mas, ddnm, tmpd_scalar };

template <typename Scalar>
struct MethodConfig {
  MethodKind kind = MethodKind::mas;
  MasWeights<Scalar> weights;       // used by mas unless the policy is unknown-noise
  NoisePolicy<Scalar> policy;       // known sigma_y also feeds tmpd_scalar
  Rt2Mode rt2 = Rt2Mode::ratio;
};

using MethodConfigD = MethodConfig<double>;

template <typename Scalar>
struct StepRecord {
  Index n;
  Vector<Scalar> x0_star;  // empty unless states are kept
  Scalar residual;         // ||y - H x0*||
  Scalar prior_residual;   // ||y - H m0|t||
  Scalar eta1;
  Scalar eta2;
  Scalar lambda_mean;
  Scalar lambda_min;
};

template <typename Scalar>
struct RunRecord {
  Vector<Scalar> x0;
  std::vector<StepRecord<Scalar>> trajectory;  // n = N first
  std::uint64_t seed = 0;
  std::string config_hash;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Index step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_;
};

struct RunOptions {
  bool keep_states = true;
};

template <typename Scalar, typename Rng>
RunRecord<Scalar> run(const SpectralOperator<Scalar>& op, const Vector<Scalar>& y,
                      const GaussianMixturePrior<Scalar>& prior, const DiffusionSchedule<Scalar>& sched,
                      const MethodConfig<Scalar>& method, Rng& rng, RunOptions options = {}) {
  using Policy = NoisePolicy<Scalar>;
  sched.validate();
  method.policy.validate();
  check_length("run prior", op.in_dim(), prior.dim());
  check_length("run y", op.out_dim(), y.size());
  const Index d = op.in_dim();
  const Index steps = sched.steps();
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));

  RunRecord<Scalar> rec;
  rec.trajectory.reserve(std::size_t(steps));
  const Scalar init_std = sched.variance_preserving ? Scalar(1) : sched.sigma[steps];
  Vector<Scalar> x(d);
  for (Index i = 0; i < d; ++i) x[i] = init_std * normal(rng);

  for (Index n = steps; n >= 1; --n) {
    const auto den = denoise(prior, x, sched.alpha[n], sched.sigma[n]);
    const auto k = step_coeffs(sched, n);
    StepRecord<Scalar> step{n, {}, 0, 0, 0, 0, 1, 1};
    std::optional<Vector<Scalar>> gammas;
    Vector<Scalar> x0;

    switch (method.kind) {
      case MethodKind::unconditional: x0 = den.mean; break;
      case MethodKind::ddnm: x0 = ddnm_projection(op, den.mean, y); break;
      case MethodKind::tmpd_scalar: {
        const Scalar r2 = rt2_policy(sched, n, method.rt2, &den);
        x0 = r2 > Scalar(0) ? tmpd_scalar_posterior_mean(op, den.mean, r2, y, method.policy.sigma_y) : den.mean;
        break;
      }
      case MethodKind::mas: {
        MasWeights<Scalar> w = method.weights;
        if (method.policy.kind == Policy::Kind::unknown) {
          if (k.c > Scalar(0)) {
            w = unknown_noise_weights(method.policy, k.a, k.c);
          } else {
            // eta2 = k a / c at its c -> 0 limit.
            w = {method.policy.eta1_base, Scalar(0), false};
            if (method.policy.k > Scalar(0) && k.a > Scalar(0)) w.eta2 = std::numeric_limits<Scalar>::infinity();
          }
        }
        step.eta1 = w.eta1;
        step.eta2 = w.eta2;
        if (std::isinf(w.eta2)) {
          x0 = den.mean;
        } else if (method.policy.kind == Policy::Kind::known_gaussian) {
          const auto budget = known_gaussian_budget(op, w, k.a, k.c, method.policy.sigma_y_eff());
          auto bm = apply_budget(op, den.mean, y, w, budget);
          x0 = std::move(bm.x0_star);
          gammas = std::move(bm.gammas);
          step.lambda_mean = budget.lambdas.mean();
          step.lambda_min = budget.lambdas.minCoeff();
        } else {
          x0 = mas_posterior_mean(op, den.mean, y, w);
        }
        break;
      }
    }

    step.residual = (y - apply(op, x0)).norm();
    step.prior_residual = (y - apply(op, den.mean)).norm();
    if (!x0.allFinite()) throw SolverError("non-finite posterior mean", n);

    Vector<Scalar> next = k.a * x0 + k.b * x;
    if (gammas) {
      next += draw_colored_noise(op, *gammas, rng);
    } else if (k.c > Scalar(0)) {
      for (Index i = 0; i < d; ++i) next[i] += k.c * normal(rng);
    }
    if (!next.allFinite()) throw SolverError("non-finite state", n);
    if (options.keep_states) step.x0_star = std::move(x0);
    rec.trajectory.push_back(std::move(step));
    x = std::move(next);
  }
  rec.x0 = std::move(x);
  return rec;
}

}  // namespace mas
