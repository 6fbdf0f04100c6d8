#pragma once

#include "mas/types.hpp"

#include <cmath>
#include <limits>

namespace mas {

template <typename Scalar>
struct MetricReport {
  Scalar psnr_db;  // +inf when identical
  Scalar ssim;
  bool identical;
};

inline void check_same_shape(const char* what, const ImageShape& a, const ImageShape& b) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

/// 10 log10(peak^2 / MSE); +inf for identical inputs.
template <typename Scalar>
Scalar psnr(const ImageTensor<Scalar>& a, const ImageTensor<Scalar>& b, Scalar peak = Scalar(1)) {
  check_same_shape("psnr", a.shape(), b.shape());
  const Scalar mse = (a.data - b.data).squaredNorm() / Scalar(a.size());
  if (mse == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(10) * std::log10(peak * peak / mse);
}

namespace detail {

template <typename Scalar>
Vector<Scalar> gaussian_window(Index size, Scalar sigma) {
  Vector<Scalar> w(size);
  const Scalar mid = Scalar(size - 1) / Scalar(2);
  for (Index i = 0; i < size; ++i) w[i] = std::exp(-(Scalar(i) - mid) * (Scalar(i) - mid) / (2 * sigma * sigma));
  return w / w.sum();
}

// Separable "valid" filtering of an h x w plane.
template <typename Scalar>
Matrix<Scalar> filter_valid(const Matrix<Scalar>& p, const Vector<Scalar>& k) {
  const Index n = k.size();
  const Index oh = p.rows() - n + 1;
  const Index ow = p.cols() - n + 1;
  Matrix<Scalar> tmp(p.rows(), ow);
  for (Index q = 0; q < ow; ++q) tmp.col(q) = p.middleCols(q, n) * k;
  Matrix<Scalar> out(oh, ow);
  for (Index r = 0; r < oh; ++r) out.row(r) = k.transpose() * tmp.middleRows(r, n);
  return out;
}

}  // namespace detail

/// Mean SSIM over valid window positions (Gaussian window, sigma 1.5),
/// computed per channel and averaged.
template <typename Scalar>
Scalar ssim(const ImageTensor<Scalar>& a, const ImageTensor<Scalar>& b, Index window = 11, Scalar k1 = Scalar(0.01),
            Scalar k2 = Scalar(0.03), Scalar peak = Scalar(1)) {
  check_same_shape("ssim", a.shape(), b.shape());
  if (a.height < window || a.width < window)
    throw std::invalid_argument("ssim: image " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                                " is smaller than the " + std::to_string(window) + "-pixel window");
  const Vector<Scalar> k = detail::gaussian_window<Scalar>(window, Scalar(1.5));
  const Scalar c1 = (k1 * peak) * (k1 * peak);
  const Scalar c2 = (k2 * peak) * (k2 * peak);
  using Plane = Matrix<Scalar>;
  using RowPlane = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  Scalar total = 0;
  const Index plane = a.height * a.width;
  for (Index c = 0; c < a.channels; ++c) {
    const Plane pa = RowPlane(a.data.data() + c * plane, a.height, a.width);
    const Plane pb = RowPlane(b.data.data() + c * plane, b.height, b.width);
    const Plane mu_a = detail::filter_valid(pa, k);
    const Plane mu_b = detail::filter_valid(pb, k);
    const Plane saa = detail::filter_valid(Plane(pa.cwiseProduct(pa)), k) - mu_a.cwiseProduct(mu_a);
    const Plane sbb = detail::filter_valid(Plane(pb.cwiseProduct(pb)), k) - mu_b.cwiseProduct(mu_b);
    const Plane sab = detail::filter_valid(Plane(pa.cwiseProduct(pb)), k) - mu_a.cwiseProduct(mu_b);
    const auto num = (2 * mu_a.array() * mu_b.array() + c1) * (2 * sab.array() + c2);
    const auto den = (mu_a.array().square() + mu_b.array().square() + c1) * (saa.array() + sbb.array() + c2);
    total += (num / den).mean();
  }
  return total / Scalar(a.channels);
}

template <typename Scalar>
MetricReport<Scalar> evaluate(const ImageTensor<Scalar>& reference, const ImageTensor<Scalar>& estimate) {
  const Scalar p = psnr(reference, estimate);
  return {p, ssim(reference, estimate), std::isinf(p)};
}

}  // namespace mas
