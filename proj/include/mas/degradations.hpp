#pragma once

// Measurement synthesis y = H x0 + corruption. Corruptions act in measurement
// space; the non-differentiable ones (quantization, block-DCT quantization)
// are what the unknown-noise policy is meant to absorb.

#include "mas/spectral_ops.hpp"
#include "mas/types.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mas {

enum class PeriodicAxis { row, column };

template <typename Scalar>
struct CorruptionSpec {
  enum class Kind { none, gaussian, salt_pepper, periodic, quantize, dct_quantize };

  Kind kind = Kind::none;
  Scalar sigma = 0;           // gaussian
  Scalar fraction = 0;        // salt_pepper
  bool clip = false;          // salt_pepper: clip the +-1 values into [0, 1]
  Scalar amplitude = 0;       // periodic
  Scalar frequency = 0;       // periodic, cycles per image extent
  PeriodicAxis axis = PeriodicAxis::row;
  int bits = 2;               // quantize
  Scalar quality_proxy = 1;   // dct_quantize: multiplier on the luminance table

  bool operator==(const CorruptionSpec&) const = default;

  void validate() const {
    if (!(sigma >= Scalar(0))) throw std::invalid_argument("CorruptionSpec: sigma must be >= 0");
    if (!(fraction >= Scalar(0) && fraction <= Scalar(1)))
      throw std::invalid_argument("CorruptionSpec: fraction must lie in [0, 1]");
    if (!(amplitude >= Scalar(0))) throw std::invalid_argument("CorruptionSpec: amplitude must be >= 0");
    if (bits < 1 || bits > 30) throw std::invalid_argument("CorruptionSpec: bits must lie in [1, 30]");
    if (!(quality_proxy >= Scalar(0))) throw std::invalid_argument("CorruptionSpec: quality_proxy must be >= 0");
  }
};

using CorruptionSpecD = CorruptionSpec<double>;

/// A sin(2 pi f i / extent) along the chosen axis, broadcast over the rest.
template <typename Scalar>
Vector<Scalar> periodic_noise(const ImageShape& shape, Scalar amplitude, Scalar frequency,
                              PeriodicAxis axis = PeriodicAxis::row) {
  if (shape.channels <= 0 || shape.height <= 0 || shape.width <= 0)
    throw std::invalid_argument("periodic_noise: dimensions must be positive");
  Vector<Scalar> field(shape.size());
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  for (Index c = 0; c < shape.channels; ++c)
    for (Index r = 0; r < shape.height; ++r)
      for (Index q = 0; q < shape.width; ++q) {
        const Scalar phase = axis == PeriodicAxis::row ? Scalar(r) / Scalar(shape.height)
                                                      : Scalar(q) / Scalar(shape.width);
        field[(c * shape.height + r) * shape.width + q] = amplitude * std::sin(two_pi * frequency * phase);
      }
  return field;
}

/// Uniform quantizer on [0, 1] with 2^bits levels k / (L - 1); ties round down.
template <typename Scalar, typename Derived>
Vector<Scalar> quantize(const Eigen::MatrixBase<Derived>& v, int bits) {
  if (bits < 1) throw std::invalid_argument("quantize: bits must be >= 1");
  const Scalar top = Scalar((std::int64_t(1) << bits) - 1);
  Vector<Scalar> out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar x = std::clamp(Scalar(v[i]), Scalar(0), Scalar(1));
    const Scalar level = std::ceil(x * top - Scalar(0.5));
    out[i] = std::clamp(level, Scalar(0), top) / top;
  }
  return out;
}

/// Standard JPEG luminance quantization table (8-bit units, row-major).
inline constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

/// libjpeg's quality-to-scale mapping, returned as a table multiplier.
inline double jpeg_quality_to_proxy(double quality) {
  if (!(quality > 0.0 && quality <= 100.0)) throw std::invalid_argument("jpeg_quality_to_proxy: quality in (0, 100]");
  return quality < 50.0 ? 50.0 / quality : (200.0 - 2.0 * quality) / 100.0;
}

template <typename Scalar>
Matrix<Scalar> dct8_matrix() {
  Matrix<Scalar> c(8, 8);
  for (Index u = 0; u < 8; ++u)
    for (Index x = 0; x < 8; ++x) {
      const Scalar a = u == 0 ? std::sqrt(Scalar(1) / Scalar(8)) : std::sqrt(Scalar(2) / Scalar(8));
      c(u, x) = a * std::cos(Scalar(2 * x + 1) * Scalar(u) * std::numbers::pi_v<Scalar> / Scalar(16));
    }
  return c;
}

/// 8x8 block DCT coefficient quantization per channel (edges replicated up
/// to a multiple of 8, then cropped). quality_proxy = 0 is the identity.
template <typename Scalar>
ImageTensor<Scalar> dct_quantize(const ImageTensor<Scalar>& img, Scalar quality_proxy) {
  if (!(quality_proxy >= Scalar(0))) throw std::invalid_argument("dct_quantize: quality_proxy must be >= 0");
  if (quality_proxy == Scalar(0)) return img;
  const Matrix<Scalar> c = dct8_matrix<Scalar>();
  const Index ph = (img.height + 7) / 8 * 8;
  const Index pw = (img.width + 7) / 8 * 8;
  const Scalar shift = Scalar(128) / Scalar(255);
  ImageTensor<Scalar> out = img;
  Matrix<Scalar> plane(ph, pw);
  for (Index ch = 0; ch < img.channels; ++ch) {
    for (Index r = 0; r < ph; ++r)
      for (Index q = 0; q < pw; ++q)
        plane(r, q) = img(ch, std::min(r, img.height - 1), std::min(q, img.width - 1)) - shift;
    for (Index br = 0; br < ph; br += 8)
      for (Index bq = 0; bq < pw; bq += 8) {
        Matrix<Scalar> coef = c * plane.block(br, bq, 8, 8) * c.transpose();
        for (Index u = 0; u < 8; ++u)
          for (Index v = 0; v < 8; ++v) {
            const Scalar step = quality_proxy * Scalar(kLuminanceTable[std::size_t(u * 8 + v)]) / Scalar(255);
            coef(u, v) = std::round(coef(u, v) / step) * step;
          }
        plane.block(br, bq, 8, 8) = c.transpose() * coef * c;
      }
    for (Index r = 0; r < img.height; ++r)
      for (Index q = 0; q < img.width; ++q) out(ch, r, q) = plane(r, q) + shift;
  }
  return out;
}

/// Replaces exactly round(fraction * size) entries with +1 or -1 (or 1 / 0 when clipped).
template <typename Scalar, typename Rng>
void add_salt_pepper(Vector<Scalar>& y, Scalar fraction, bool clip, Rng& rng) {
  const auto count = Index(std::llround(double(fraction) * double(y.size())));
  std::vector<Index> idx(std::size_t(y.size()));
  std::iota(idx.begin(), idx.end(), Index(0));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < count; ++i) {
    const Scalar v = coin(rng) ? Scalar(1) : Scalar(-1);
    y[idx[std::size_t(i)]] = clip ? std::max(v, Scalar(0)) : v;
  }
}

/// y = H x0 followed by the corruption. Periodic and block-DCT corruptions
/// need the image shape of the measurement space.
template <typename Scalar, typename Derived, typename Rng>
Vector<Scalar> measure(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<Derived>& x0,
                       const CorruptionSpec<Scalar>& spec, Rng& rng,
                       std::optional<ImageShape> measurement_shape = std::nullopt) {
  using Kind = typename CorruptionSpec<Scalar>::Kind;
  spec.validate();
  Vector<Scalar> y = apply(op, x0);
  auto need_shape = [&](const char* what) {
    if (!measurement_shape) throw std::invalid_argument(std::string(what) + " needs the measurement image shape");
    check_length(what, measurement_shape->size(), y.size());
    return *measurement_shape;
  };
  switch (spec.kind) {
    case Kind::none: break;
    case Kind::gaussian: {
      std::normal_distribution<Scalar> normal(Scalar(0), spec.sigma);
      for (Index i = 0; i < y.size(); ++i) y[i] += normal(rng);
      break;
    }
    case Kind::salt_pepper: add_salt_pepper(y, spec.fraction, spec.clip, rng); break;
    case Kind::periodic:
      y += periodic_noise<Scalar>(need_shape("periodic corruption"), spec.amplitude, spec.frequency, spec.axis);
      break;
    case Kind::quantize: y = quantize<Scalar>(y, spec.bits); break;
    case Kind::dct_quantize: {
      const ImageShape s = need_shape("dct_quantize corruption");
      y = dct_quantize(ImageTensor<Scalar>(s.channels, s.height, s.width, std::move(y)), spec.quality_proxy).data;
      break;
    }
  }
  return y;
}

}  // namespace mas
