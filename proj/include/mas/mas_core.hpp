#pragma once

// Measurement-aligned posterior mean
//
//   x0* = argmin ||x0 - m||^2 + ||y - H x0||^2_{W^-1},   W = eta1 H H^T + eta2 I,
//       = Y^-1 [m + H^T W^-1 y],                          Y = I + H^T W^-1 H,
//
// evaluated mode by mode in the SVD basis of H. With D_i = eta1 s_i^2 + eta2,
// V-mode i of x0* is (D_i * (V^T m)_i + s_i * (U^T y)_i) / (D_i + s_i^2); null
// modes pass m through. At D_i = 0 this is the DDNM projection on that mode.

#include "mas/spectral_ops.hpp"
#include "mas/types.hpp"

#include <Eigen/LU>

#include <vector>

namespace mas {

template <typename Scalar>
struct MasWeights {
  Scalar eta1 = 0;  // may be negative ("overshooting")
  Scalar eta2 = 0;
  bool allow_negative_eta2 = false;

  void validate() const {
    if (!std::isfinite(eta1) || !std::isfinite(eta2)) throw std::invalid_argument("MasWeights: non-finite eta");
    if (eta2 < Scalar(0) && !allow_negative_eta2)
      throw std::invalid_argument("MasWeights: negative eta2 requires the unsafe flag");
  }
};

using MasWeightsD = MasWeights<double>;

/// eta1 = sigma_eps^2 / r_t^2, eta2 = sigma_y^2 / r_t^2.
template <typename Scalar>
MasWeights<Scalar> weights_from_variances(Scalar sigma_eps2, Scalar sigma_y2, Scalar r_t2) {
  if (!(r_t2 > Scalar(0))) throw std::invalid_argument("weights_from_variances: r_t^2 must be positive");
  return {sigma_eps2 / r_t2, sigma_y2 / r_t2, false};
}

/// V-space gain applied to (U^T y)_i: s / ((eta1 + 1) s^2 + eta2).
template <typename Scalar>
Scalar measurement_gain(Scalar s, const MasWeights<Scalar>& w) {
  return s / ((w.eta1 + Scalar(1)) * s * s + w.eta2);
}

/// Modes where eta1 s^2 + eta2 nearly cancels without both etas being zero.
template <typename Scalar>
std::vector<Index> near_cancellation_modes(const SpectralOperator<Scalar>& op, const MasWeights<Scalar>& w) {
  std::vector<Index> out;
  if (w.eta1 == Scalar(0) && w.eta2 == Scalar(0)) return out;
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s2 = op.singulars()[i] * op.singulars()[i];
    if (std::abs(w.eta1 * s2 + w.eta2) < Scalar(1e-8) * s2) out.push_back(i);
  }
  return out;
}

template <typename Scalar, typename D1, typename D2>
Vector<Scalar> mas_posterior_mean(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<D1>& m0t,
                                  const Eigen::MatrixBase<D2>& y, const MasWeights<Scalar>& w) {
  w.validate();
  check_length("mas_posterior_mean m0t", op.in_dim(), m0t.size());
  check_length("mas_posterior_mean y", op.out_dim(), y.size());
  Vector<Scalar> x = op.Vt(m0t.template cast<Scalar>().eval());
  const Vector<Scalar> z = op.Ut(y.template cast<Scalar>().eval());
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s = op.singulars()[i];
    const Scalar dw = w.eta1 * s * s + w.eta2;
    const Scalar den = dw + s * s;
    if (!(den > Scalar(0)))
      throw InstabilityError("mas_posterior_mean: (eta1 + 1) s^2 + eta2 <= 0", i);
    x[i] = (dw * x[i] + s * z[i]) / den;
  }
  return op.V(x);
}

/// Literal two-stage evaluation: scale U-modes by W^-1, form m + H^T(.), then
/// scale V-modes by Y^-1. Undefined where eta1 s^2 + eta2 = 0.
template <typename Scalar, typename D1, typename D2>
Vector<Scalar> listing_posterior_mean(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<D1>& m0t,
                                      const Eigen::MatrixBase<D2>& y, const MasWeights<Scalar>& w) {
  w.validate();
  Vector<Scalar> ut_y = op.Ut(y.template cast<Scalar>().eval());
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s = op.singulars()[i];
    ut_y[i] *= Scalar(1) / (s * s * w.eta1 + w.eta2);
  }
  const Vector<Scalar> rhs = m0t.template cast<Scalar>() + adjoint(op, op.U(ut_y));
  Vector<Scalar> vt_rhs = op.Vt(rhs);
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s = op.singulars()[i];
    vt_rhs[i] *= Scalar(1) / (Scalar(1) + s * s / (s * s * w.eta1 + w.eta2));
  }
  return op.V(vt_rhs);
}

/// m + H^dagger (y - H m).
template <typename Scalar, typename D1, typename D2>
Vector<Scalar> ddnm_projection(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<D1>& m0t,
                               const Eigen::MatrixBase<D2>& y) {
  check_length("ddnm_projection m0t", op.in_dim(), m0t.size());
  check_length("ddnm_projection y", op.out_dim(), y.size());
  const Vector<Scalar> m = m0t.template cast<Scalar>();
  return m + pinv_apply(op, (y.template cast<Scalar>() - apply(op, m)).eval());
}

/// m + r^2 H^T (r^2 H H^T + sigma_y^2 I)^-1 (y - H m), i.e. a scalar prior covariance r^2 I.
template <typename Scalar, typename D1, typename D2>
Vector<Scalar> tmpd_scalar_posterior_mean(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<D1>& m0t,
                                          Scalar r_t2, const Eigen::MatrixBase<D2>& y, Scalar sigma_y) {
  if (!(r_t2 > Scalar(0))) throw std::invalid_argument("tmpd_scalar_posterior_mean: r_t^2 must be positive");
  check_length("tmpd_scalar_posterior_mean m0t", op.in_dim(), m0t.size());
  check_length("tmpd_scalar_posterior_mean y", op.out_dim(), y.size());
  const Vector<Scalar> m = m0t.template cast<Scalar>();
  const Vector<Scalar> z = op.Ut((y.template cast<Scalar>() - apply(op, m)).eval());
  Vector<Scalar> delta = Vector<Scalar>::Zero(op.in_dim());
  const Scalar sy2 = sigma_y * sigma_y;
  for (Index i = 0; i < op.mode_count(); ++i) {
    if (!op.is_active(i)) continue;
    const Scalar s = op.singulars()[i];
    delta[i] = r_t2 * s * z[i] / (r_t2 * s * s + sy2);
  }
  return m + op.V(delta);
}

inline constexpr Index kDenseSolveMaxDim = 512;

/// Brute-force reference: materializes W and Y and solves with full-pivot LU.
template <typename Scalar, typename D1, typename D2>
Vector<Scalar> dense_posterior_mean(const Matrix<Scalar>& h, const Eigen::MatrixBase<D1>& m0t,
                                    const Eigen::MatrixBase<D2>& y, const MasWeights<Scalar>& w) {
  w.validate();
  if (h.cols() > kDenseSolveMaxDim)
    throw std::invalid_argument("dense_posterior_mean: d = " + std::to_string(h.cols()) + " exceeds " +
                                std::to_string(kDenseSolveMaxDim));
  check_length("dense_posterior_mean m0t", h.cols(), m0t.size());
  check_length("dense_posterior_mean y", h.rows(), y.size());
  const Index d = h.cols();
  Matrix<Scalar> wm = w.eta1 * (h * h.transpose());
  wm.diagonal().array() += w.eta2;
  Eigen::FullPivLU<Matrix<Scalar>> wlu(wm);
  if (!wlu.isInvertible()) throw InstabilityError("dense_posterior_mean: W is singular", -1);
  const Matrix<Scalar> winv_h = wlu.solve(h);
  const Vector<Scalar> winv_y = wlu.solve(y.template cast<Scalar>().eval());
  const Matrix<Scalar> ym = Matrix<Scalar>::Identity(d, d) + h.transpose() * winv_h;
  Eigen::FullPivLU<Matrix<Scalar>> ylu(ym);
  if (!ylu.isInvertible()) throw InstabilityError("dense_posterior_mean: Y is singular", -1);
  return ylu.solve((m0t.template cast<Scalar>() + h.transpose() * winv_y).eval());
}

}  // namespace mas
