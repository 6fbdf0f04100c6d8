#pragma once

// Linear forward operators held as SVD factors H = U diag(s) V^T. Structured
// operators apply U, U^T, V, V^T without materializing any matrix; the dense
// fallback keeps explicit factors and is size-capped.

#include "mas/types.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <memory>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace mas {

enum class Structure { identity, mask, block_downsample, circular_blur, channel_average, dense };

inline std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::identity: return "identity";
    case Structure::mask: return "mask";
    case Structure::block_downsample: return "block_downsample";
    case Structure::circular_blur: return "circular_blur";
    case Structure::channel_average: return "channel_average";
    case Structure::dense: return "dense";
  }
  return "unknown";
}

/// Orthogonal factor pair of an SVD. U acts on the m-dimensional measurement
/// space, V on the d-dimensional signal space.
template <typename Scalar>
class SvdFactors {
 public:
  using Vec = Vector<Scalar>;
  virtual ~SvdFactors() = default;
  virtual Vec u(const Vec& z) const = 0;
  virtual Vec ut(const Vec& v) const = 0;
  virtual Vec v(const Vec& z) const = 0;
  virtual Vec vt(const Vec& x) const = 0;
};

template <typename Scalar>
class SpectralOperator {
 public:
  using Vec = Vector<Scalar>;

  SpectralOperator(Index in_dim, Index out_dim, Vec singulars, Structure tag,
                   std::shared_ptr<const SvdFactors<Scalar>> factors)
      : in_dim_(in_dim), out_dim_(out_dim), singulars_(std::move(singulars)), tag_(tag), factors_(std::move(factors)) {
    if (in_dim_ <= 0 || out_dim_ <= 0) throw std::invalid_argument("SpectralOperator: dimensions must be positive");
    check_length("SpectralOperator singulars", std::min(in_dim_, out_dim_), singulars_.size());
    if ((singulars_.array() < Scalar(0)).any()) throw std::invalid_argument("SpectralOperator: negative singular value");
    s_max_ = singulars_.size() ? singulars_.maxCoeff() : Scalar(0);
  }

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  /// Number of paired (U, V) modes; min(in_dim, out_dim).
  Index mode_count() const { return singulars_.size(); }
  const Vec& singulars() const { return singulars_; }
  Structure structure() const { return tag_; }
  Scalar max_singular() const { return s_max_; }
  Scalar rank_tol() const { return Scalar(1e-10) * s_max_; }

  /// Singular value of V-space mode i, zero past mode_count().
  Scalar singular(Index i) const { return i < mode_count() ? singulars_[i] : Scalar(0); }
  bool is_active(Index i) const { return singular(i) > rank_tol(); }

  Vec U(const Vec& z) const {
    check_length("U", out_dim_, z.size());
    return factors_->u(z);
  }
  Vec Ut(const Vec& v) const {
    check_length("U^T", out_dim_, v.size());
    return factors_->ut(v);
  }
  Vec V(const Vec& z) const {
    check_length("V", in_dim_, z.size());
    return factors_->v(z);
  }
  Vec Vt(const Vec& x) const {
    check_length("V^T", in_dim_, x.size());
    return factors_->vt(x);
  }

 private:
  Index in_dim_;
  Index out_dim_;
  Vec singulars_;
  Structure tag_;
  std::shared_ptr<const SvdFactors<Scalar>> factors_;
  Scalar s_max_ = 0;
};

using SpectralOperatorD = SpectralOperator<double>;

// ---------------------------------------------------------------------------
// Factor-wise applications.

template <typename Scalar, typename Derived>
Vector<Scalar> apply(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  check_length("apply", op.in_dim(), x.size());
  const Vector<Scalar> z = op.Vt(x.template cast<Scalar>().eval());
  Vector<Scalar> w = Vector<Scalar>::Zero(op.out_dim());
  const Index k = op.mode_count();
  w.head(k) = op.singulars().cwiseProduct(z.head(k));
  return op.U(w);
}

template <typename Scalar, typename Derived>
Vector<Scalar> adjoint(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<Derived>& v) {
  check_length("adjoint", op.out_dim(), v.size());
  const Vector<Scalar> z = op.Ut(v.template cast<Scalar>().eval());
  Vector<Scalar> w = Vector<Scalar>::Zero(op.in_dim());
  const Index k = op.mode_count();
  w.head(k) = op.singulars().cwiseProduct(z.head(k));
  return op.V(w);
}

/// Moore-Penrose pseudo-inverse; modes with s <= rank_tol are annihilated.
template <typename Scalar, typename Derived>
Vector<Scalar> pinv_apply(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<Derived>& v) {
  check_length("pinv_apply", op.out_dim(), v.size());
  const Vector<Scalar> z = op.Ut(v.template cast<Scalar>().eval());
  Vector<Scalar> w = Vector<Scalar>::Zero(op.in_dim());
  for (Index i = 0; i < op.mode_count(); ++i)
    if (op.is_active(i)) w[i] = z[i] / op.singulars()[i];
  return op.V(w);
}

/// Orthogonal projection onto the row space of H (span of active V modes).
template <typename Scalar, typename Derived>
Vector<Scalar> row_space_projection(const SpectralOperator<Scalar>& op, const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> z = op.Vt(x.template cast<Scalar>().eval());
  for (Index i = 0; i < op.in_dim(); ++i)
    if (!op.is_active(i)) z[i] = Scalar(0);
  return op.V(z);
}

/// Explicit m x d matrix, built column by column through apply().
template <typename Scalar>
Matrix<Scalar> materialize(const SpectralOperator<Scalar>& op) {
  Matrix<Scalar> h(op.out_dim(), op.in_dim());
  Vector<Scalar> e = Vector<Scalar>::Zero(op.in_dim());
  for (Index j = 0; j < op.in_dim(); ++j) {
    e[j] = Scalar(1);
    h.col(j) = apply(op, e);
    e[j] = Scalar(0);
  }
  return h;
}

namespace detail {

template <typename Scalar>
class IdentityFactors final : public SvdFactors<Scalar> {
 public:
  using Vec = Vector<Scalar>;
  Vec u(const Vec& z) const override { return z; }
  Vec ut(const Vec& v) const override { return v; }
  Vec v(const Vec& z) const override { return z; }
  Vec vt(const Vec& x) const override { return x; }
};

// V is the permutation that lists kept coordinates first; U is the identity.
template <typename Scalar>
class MaskFactors final : public SvdFactors<Scalar> {
 public:
  using Vec = Vector<Scalar>;
  explicit MaskFactors(std::vector<Index> order) : order_(std::move(order)) {}

  Vec u(const Vec& z) const override { return z; }
  Vec ut(const Vec& v) const override { return v; }
  Vec v(const Vec& z) const override {
    Vec x(z.size());
    for (std::size_t i = 0; i < order_.size(); ++i) x[order_[i]] = z[Index(i)];
    return x;
  }
  Vec vt(const Vec& x) const override {
    Vec z(x.size());
    for (std::size_t i = 0; i < order_.size(); ++i) z[Index(i)] = x[order_[i]];
    return z;
  }

 private:
  std::vector<Index> order_;
};

// Orthogonal g x g matrix whose first column is ones / sqrt(g): the Householder
// reflection taking e1 onto that unit vector.
template <typename Scalar>
Matrix<Scalar> averaging_basis(Index g) {
  Vector<Scalar> u = Vector<Scalar>::Constant(g, Scalar(1) / std::sqrt(Scalar(g)));
  Vector<Scalar> w = -u;
  w[0] += Scalar(1);
  Matrix<Scalar> q = Matrix<Scalar>::Identity(g, g);
  const Scalar nrm2 = w.squaredNorm();
  if (nrm2 > Scalar(0)) q -= Scalar(2) * w * w.transpose() / nrm2;
  return q;
}

// Each output is the mean of a disjoint group of g inputs. Rows are orthogonal
// with norm 1/sqrt(g): U = I, s = 1/sqrt(g), and V carries a per-group
// orthonormal basis whose first vector is the normalized group indicator.
// V-space layout: [group means (m) | per-group complements (m * (g - 1))].
template <typename Scalar>
class GroupAverageFactors final : public SvdFactors<Scalar> {
 public:
  using Vec = Vector<Scalar>;
  GroupAverageFactors(std::vector<Index> members, Index groups, Index group_size)
      : members_(std::move(members)), groups_(groups), g_(group_size), q_(averaging_basis<Scalar>(group_size)) {}

  Vec u(const Vec& z) const override { return z; }
  Vec ut(const Vec& v) const override { return v; }

  Vec vt(const Vec& x) const override {
    Vec z(x.size());
    Vec block(g_);
    for (Index j = 0; j < groups_; ++j) {
      for (Index l = 0; l < g_; ++l) block[l] = x[members_[std::size_t(j * g_ + l)]];
      const Vec c = q_.transpose() * block;
      z[j] = c[0];
      for (Index l = 1; l < g_; ++l) z[groups_ + j * (g_ - 1) + (l - 1)] = c[l];
    }
    return z;
  }

  Vec v(const Vec& z) const override {
    Vec x(z.size());
    Vec c(g_);
    for (Index j = 0; j < groups_; ++j) {
      c[0] = z[j];
      for (Index l = 1; l < g_; ++l) c[l] = z[groups_ + j * (g_ - 1) + (l - 1)];
      const Vec block = q_ * c;
      for (Index l = 0; l < g_; ++l) x[members_[std::size_t(j * g_ + l)]] = block[l];
    }
    return x;
  }

 private:
  std::vector<Index> members_;
  Index groups_;
  Index g_;
  Matrix<Scalar> q_;
};

template <typename Scalar>
using ComplexGrid = std::vector<std::complex<Scalar>>;

// Unscaled 2-D DFT (forward: exp(-i...), inverse: exp(+i...) without 1/N).
template <typename Scalar>
void fft2(ComplexGrid<Scalar>& a, Index h, Index w, bool inverse) {
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::Unscaled);
  std::vector<std::complex<Scalar>> in, out;
  if (w > 1) {
    in.resize(std::size_t(w));
    for (Index r = 0; r < h; ++r) {
      std::copy_n(a.begin() + r * w, w, in.begin());
      inverse ? fft.inv(out, in) : fft.fwd(out, in);
      std::copy_n(out.begin(), w, a.begin() + r * w);
    }
  }
  if (h > 1) {
    in.resize(std::size_t(h));
    for (Index c = 0; c < w; ++c) {
      for (Index r = 0; r < h; ++r) in[std::size_t(r)] = a[std::size_t(r * w + c)];
      inverse ? fft.inv(out, in) : fft.fwd(out, in);
      for (Index r = 0; r < h; ++r) a[std::size_t(r * w + c)] = out[std::size_t(r)];
    }
  }
}

// Circular convolution diagonalized by an orthonormal real Fourier basis F.
// A self-conjugate frequency contributes one real coefficient; every other
// conjugate pair contributes (re, im). On each pair the operator acts as
// |lambda| times a rotation by arg(lambda), so V = F^T and U = F^T Rot.
template <typename Scalar>
class CircularFactors final : public SvdFactors<Scalar> {
 public:
  using Vec = Vector<Scalar>;
  enum class Kind { self, re, im };
  struct Mode {
    Index freq;       // row-major frequency index
    Index partner;    // frequency index of the conjugate partner
    Kind kind;
    Scalar cos_phase;
    Scalar sin_phase;
  };

  CircularFactors(Index channels, Index h, Index w, std::vector<Mode> modes)
      : channels_(channels), h_(h), w_(w), modes_(std::move(modes)) {}

  Vec vt(const Vec& x) const override { return forward(x); }
  Vec v(const Vec& z) const override { return inverse(z); }
  Vec ut(const Vec& v) const override { return rotate(forward(v), Scalar(-1)); }
  Vec u(const Vec& z) const override { return inverse(rotate(z, Scalar(1))); }

 private:
  Index plane() const { return h_ * w_; }

  Vec forward(const Vec& x) const {
    const Index n = plane();
    const Scalar inv_sqrt_n = Scalar(1) / std::sqrt(Scalar(n));
    const Scalar root2 = std::sqrt(Scalar(2));
    Vec z(x.size());
    ComplexGrid<Scalar> grid(static_cast<std::size_t>(n));
    for (Index c = 0; c < channels_; ++c) {
      for (Index i = 0; i < n; ++i) grid[std::size_t(i)] = x[c * n + i];
      fft2(grid, h_, w_, false);
      for (Index i = 0; i < n; ++i) {
        const Mode& m = modes_[std::size_t(i)];
        const auto val = grid[std::size_t(m.freq)];
        switch (m.kind) {
          case Kind::self: z[c * n + i] = val.real() * inv_sqrt_n; break;
          case Kind::re: z[c * n + i] = root2 * val.real() * inv_sqrt_n; break;
          case Kind::im: z[c * n + i] = root2 * val.imag() * inv_sqrt_n; break;
        }
      }
    }
    return z;
  }

  Vec inverse(const Vec& z) const {
    const Index n = plane();
    const Scalar sqrt_n = std::sqrt(Scalar(n));
    const Scalar half_root2 = std::sqrt(Scalar(n) / Scalar(2));
    Vec x(z.size());
    ComplexGrid<Scalar> grid(static_cast<std::size_t>(n));
    for (Index c = 0; c < channels_; ++c) {
      for (Index i = 0; i < n; ++i) {
        const Mode& m = modes_[std::size_t(i)];
        const Scalar val = z[c * n + i];
        switch (m.kind) {
          case Kind::self: grid[std::size_t(m.freq)] = {val * sqrt_n, Scalar(0)}; break;
          case Kind::re:
            grid[std::size_t(m.freq)].real(val * half_root2);
            grid[std::size_t(m.partner)].real(val * half_root2);
            break;
          case Kind::im:
            grid[std::size_t(m.freq)].imag(val * half_root2);
            grid[std::size_t(m.partner)].imag(-val * half_root2);
            break;
        }
      }
      fft2(grid, h_, w_, true);
      for (Index i = 0; i < n; ++i) x[c * n + i] = grid[std::size_t(i)].real() / Scalar(n);
    }
    return x;
  }

  // Multiplies each (re, im) pair by exp(i * dir * phase); self modes by sign.
  Vec rotate(Vec z, Scalar dir) const {
    const Index n = plane();
    for (Index c = 0; c < channels_; ++c) {
      for (Index i = 0; i < n; ++i) {
        const Mode& m = modes_[std::size_t(i)];
        if (m.kind == Kind::self) {
          z[c * n + i] *= m.cos_phase;
        } else if (m.kind == Kind::re) {
          const Scalar a = z[c * n + i];
          const Scalar b = z[c * n + i + 1];
          const Scalar s = dir * m.sin_phase;
          z[c * n + i] = a * m.cos_phase - b * s;
          z[c * n + i + 1] = a * s + b * m.cos_phase;
        }
      }
    }
    return z;
  }

  Index channels_;
  Index h_;
  Index w_;
  std::vector<Mode> modes_;  // one entry per plane coefficient; re is always followed by its im
};

template <typename Scalar>
class DenseFactors final : public SvdFactors<Scalar> {
 public:
  using Vec = Vector<Scalar>;
  DenseFactors(Matrix<Scalar> u, Matrix<Scalar> v) : u_(std::move(u)), v_(std::move(v)) {}
  Vec u(const Vec& z) const override { return u_ * z; }
  Vec ut(const Vec& v) const override { return u_.transpose() * v; }
  Vec v(const Vec& z) const override { return v_ * z; }
  Vec vt(const Vec& x) const override { return v_.transpose() * x; }

 private:
  Matrix<Scalar> u_;
  Matrix<Scalar> v_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Operator catalog.

template <typename Scalar = double>
SpectralOperator<Scalar> build_identity(Index d) {
  return {d, d, Vector<Scalar>::Ones(d), Structure::identity, std::make_shared<detail::IdentityFactors<Scalar>>()};
}

/// Keeps coordinates where mask is true; the output lists them in index order.
template <typename Scalar = double>
SpectralOperator<Scalar> build_mask(const std::vector<bool>& mask) {
  std::vector<Index> order;
  order.reserve(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) order.push_back(Index(i));
  const Index kept = Index(order.size());
  if (kept == 0) throw std::invalid_argument("build_mask: every entry is masked; the measurement is empty");
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) order.push_back(Index(i));
  const Index d = Index(mask.size());
  return {d, kept, Vector<Scalar>::Ones(kept), Structure::mask,
          std::make_shared<detail::MaskFactors<Scalar>>(std::move(order))};
}

/// Per-pixel mask (true = observed) broadcast over channels.
inline std::vector<bool> broadcast_pixel_mask(const std::vector<bool>& pixel_mask, Index channels) {
  std::vector<bool> out;
  out.reserve(pixel_mask.size() * std::size_t(channels));
  for (Index c = 0; c < channels; ++c) out.insert(out.end(), pixel_mask.begin(), pixel_mask.end());
  return out;
}

/// Hides exactly round(masked_fraction * H * W) pixels chosen uniformly.
template <typename Rng>
std::vector<bool> random_pixel_mask(Index height, Index width, double masked_fraction, Rng& rng) {
  if (masked_fraction < 0.0 || masked_fraction > 1.0)
    throw std::invalid_argument("random_pixel_mask: fraction must be in [0, 1]");
  const Index pixels = height * width;
  const auto hidden = Index(std::llround(masked_fraction * double(pixels)));
  std::vector<Index> idx(static_cast<std::size_t>(pixels));
  std::iota(idx.begin(), idx.end(), Index(0));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<bool> mask(std::size_t(pixels), true);
  for (Index i = 0; i < hidden; ++i) mask[std::size_t(idx[std::size_t(i)])] = false;
  return mask;
}

/// Hides a box_h x box_w rectangle centred in the image.
inline std::vector<bool> box_pixel_mask(Index height, Index width, Index box_h, Index box_w) {
  if (box_h > height || box_w > width || box_h < 0 || box_w < 0)
    throw std::invalid_argument("box_pixel_mask: box larger than the image");
  const Index r0 = (height - box_h) / 2;
  const Index c0 = (width - box_w) / 2;
  std::vector<bool> mask(std::size_t(height * width), true);
  for (Index r = r0; r < r0 + box_h; ++r)
    for (Index c = c0; c < c0 + box_w; ++c) mask[std::size_t(r * width + c)] = false;
  return mask;
}

/// factor x factor block averaging per channel; every mode has s = 1 / factor.
template <typename Scalar = double>
SpectralOperator<Scalar> build_block_downsample(Index channels, Index height, Index width, Index factor) {
  if (factor <= 0 || height % factor != 0 || width % factor != 0)
    throw std::invalid_argument("build_block_downsample: factor " + std::to_string(factor) +
                                " does not divide " + std::to_string(height) + "x" + std::to_string(width));
  const Index oh = height / factor;
  const Index ow = width / factor;
  const Index groups = channels * oh * ow;
  const Index g = factor * factor;
  std::vector<Index> members;
  members.reserve(std::size_t(groups * g));
  for (Index c = 0; c < channels; ++c)
    for (Index r = 0; r < oh; ++r)
      for (Index q = 0; q < ow; ++q)
        for (Index dr = 0; dr < factor; ++dr)
          for (Index dq = 0; dq < factor; ++dq)
            members.push_back((c * height + r * factor + dr) * width + q * factor + dq);
  return {channels * height * width, groups, Vector<Scalar>::Constant(groups, Scalar(1) / Scalar(factor)),
          Structure::block_downsample,
          std::make_shared<detail::GroupAverageFactors<Scalar>>(std::move(members), groups, g)};
}

/// RGB -> gray by the row (1/3, 1/3, 1/3); every mode has s = 1/sqrt(3).
template <typename Scalar = double>
SpectralOperator<Scalar> build_channel_average(Index channels, Index height, Index width) {
  if (channels != 3)
    throw std::invalid_argument("build_channel_average: expected 3 channels, got " + std::to_string(channels));
  const Index pixels = height * width;
  std::vector<Index> members;
  members.reserve(std::size_t(3 * pixels));
  for (Index p = 0; p < pixels; ++p)
    for (Index c = 0; c < 3; ++c) members.push_back(c * pixels + p);
  return {3 * pixels, pixels, Vector<Scalar>::Constant(pixels, Scalar(1) / std::sqrt(Scalar(3))),
          Structure::channel_average,
          std::make_shared<detail::GroupAverageFactors<Scalar>>(std::move(members), pixels, 3)};
}

/// Circular 2-D convolution with an odd-sized kernel, applied per channel.
template <typename Scalar = double>
SpectralOperator<Scalar> build_circular_blur(Index channels, Index height, Index width, const Matrix<Scalar>& kernel) {
  using Factors = detail::CircularFactors<Scalar>;
  const Index kh = kernel.rows();
  const Index kw = kernel.cols();
  if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("build_circular_blur: kernel size must be odd");
  if (kh > height || kw > width) throw std::invalid_argument("build_circular_blur: kernel larger than the image");
  if (!kernel.allFinite()) throw std::invalid_argument("build_circular_blur: non-finite kernel");

  const Index n = height * width;
  detail::ComplexGrid<Scalar> lambda(std::size_t(n), std::complex<Scalar>(0));
  for (Index i = 0; i < kh; ++i)
    for (Index j = 0; j < kw; ++j) {
      const Index r = ((i - kh / 2) % height + height) % height;
      const Index c = ((j - kw / 2) % width + width) % width;
      lambda[std::size_t(r * width + c)] += kernel(i, j);
    }
  detail::fft2(lambda, height, width, false);

  std::vector<typename Factors::Mode> modes;
  modes.reserve(std::size_t(n));
  Vector<Scalar> plane_s(n);
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c) {
      const Index f = r * width + c;
      const Index partner = ((height - r) % height) * width + (width - c) % width;
      const auto lam = lambda[std::size_t(f)];
      const Scalar mag = std::abs(lam);
      if (partner == f) {
        plane_s[Index(modes.size())] = mag;
        modes.push_back({f, f, Factors::Kind::self, lam.real() < Scalar(0) ? Scalar(-1) : Scalar(1), Scalar(0)});
      } else if (f < partner) {
        const Scalar cs = mag > Scalar(0) ? lam.real() / mag : Scalar(1);
        const Scalar sn = mag > Scalar(0) ? lam.imag() / mag : Scalar(0);
        plane_s[Index(modes.size())] = mag;
        modes.push_back({f, partner, Factors::Kind::re, cs, sn});
        plane_s[Index(modes.size())] = mag;
        modes.push_back({f, partner, Factors::Kind::im, cs, sn});
      }
    }

  Vector<Scalar> s(channels * n);
  for (Index ch = 0; ch < channels; ++ch) s.segment(ch * n, n) = plane_s;
  return {channels * n, channels * n, std::move(s), Structure::circular_blur,
          std::make_shared<Factors>(channels, height, width, std::move(modes))};
}

/// Separable form: the 1-D kernel runs along every axis longer than 1, so a
/// 1 x W image is treated as a 1-D signal.
template <typename Scalar = double>
SpectralOperator<Scalar> build_circular_blur(Index channels, Index height, Index width, const Vector<Scalar>& kernel) {
  if (kernel.size() % 2 == 0) throw std::invalid_argument("build_circular_blur: kernel length must be odd");
  const Vector<Scalar> one = Vector<Scalar>::Ones(1);
  const Vector<Scalar>& kr = height > 1 ? kernel : one;
  const Vector<Scalar>& kc = width > 1 ? kernel : one;
  return build_circular_blur<Scalar>(channels, height, width, Matrix<Scalar>(kr * kc.transpose()));
}

template <typename Scalar = double>
Vector<Scalar> uniform_kernel(Index size) {
  return Vector<Scalar>::Constant(size, Scalar(1) / Scalar(size));
}

inline constexpr Index kDenseEntryCap = Index(4096) * 4096;

/// Numeric SVD of an explicit matrix; oracle path for small operators.
template <typename Scalar = double>
SpectralOperator<Scalar> build_dense(const Matrix<Scalar>& h, Index entry_cap = kDenseEntryCap) {
  if (h.size() == 0) throw std::invalid_argument("build_dense: empty matrix");
  if (h.size() > entry_cap)
    throw std::invalid_argument("build_dense: " + std::to_string(h.size()) + " entries exceed the cap of " +
                                std::to_string(entry_cap));
  if (!h.allFinite()) throw std::invalid_argument("build_dense: non-finite entries");
  Eigen::BDCSVD<Matrix<Scalar>> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {h.cols(), h.rows(), svd.singularValues(), Structure::dense,
          std::make_shared<detail::DenseFactors<Scalar>>(svd.matrixU(), svd.matrixV())};
}

}  // namespace mas
