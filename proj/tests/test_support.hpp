#pragma once

// Shared fixtures and brute-force oracles for the test suites. Oracles build
// explicit matrices by direct loops so they never go through SVD factors.

#include "mas/spectral_ops.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace mas::testing {

inline VectorXd random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

/// Random matrix of the given rank (rank <= min(rows, cols)).
inline MatrixXd random_rank_matrix(Index rows, Index cols, Index rank, std::mt19937_64& rng) {
  return random_matrix(rows, rank, rng) * random_matrix(rank, cols, rng);
}

inline MatrixXd mask_matrix(const std::vector<bool>& mask) {
  const auto kept = Index(std::count(mask.begin(), mask.end(), true));
  MatrixXd h = MatrixXd::Zero(kept, Index(mask.size()));
  Index row = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) h(row++, Index(i)) = 1.0;
  return h;
}

inline MatrixXd block_average_matrix(Index channels, Index height, Index width, Index f) {
  const Index oh = height / f, ow = width / f;
  MatrixXd h = MatrixXd::Zero(channels * oh * ow, channels * height * width);
  for (Index c = 0; c < channels; ++c)
    for (Index r = 0; r < height; ++r)
      for (Index q = 0; q < width; ++q)
        h((c * oh + r / f) * ow + q / f, (c * height + r) * width + q) = 1.0 / double(f * f);
  return h;
}

inline MatrixXd channel_average_matrix(Index height, Index width) {
  const Index p = height * width;
  MatrixXd h = MatrixXd::Zero(p, 3 * p);
  for (Index i = 0; i < p; ++i)
    for (Index c = 0; c < 3; ++c) h(i, c * p + i) = 1.0 / 3.0;
  return h;
}

/// y[r, q] = sum_{i, j} k[i, j] x[r - (i - kh/2), q - (j - kw/2)] (circular), per channel.
inline MatrixXd circular_conv_matrix(Index channels, Index height, Index width, const MatrixXd& k) {
  const Index n = height * width;
  MatrixXd h = MatrixXd::Zero(channels * n, channels * n);
  for (Index c = 0; c < channels; ++c)
    for (Index r = 0; r < height; ++r)
      for (Index q = 0; q < width; ++q)
        for (Index i = 0; i < k.rows(); ++i)
          for (Index j = 0; j < k.cols(); ++j) {
            const Index sr = ((r - (i - k.rows() / 2)) % height + height) % height;
            const Index sq = ((q - (j - k.cols() / 2)) % width + width) % width;
            h(c * n + r * width + q, c * n + sr * width + sq) += k(i, j);
          }
  return h;
}

struct CatalogCase {
  std::string name;
  SpectralOperatorD op;
  MatrixXd oracle;
  bool mass_preserving;
};

/// Small instances of every operator structure with an independent explicit matrix.
inline std::vector<CatalogCase> small_catalog(std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::vector<CatalogCase> out;
  out.push_back({"identity", build_identity(12), MatrixXd::Identity(12, 12), true});

  auto pix = random_pixel_mask(4, 4, 0.7, rng);
  auto mask = broadcast_pixel_mask(pix, 2);
  out.push_back({"mask", build_mask(mask), mask_matrix(mask), true});

  out.push_back({"block_downsample", build_block_downsample(2, 4, 6, 2), block_average_matrix(2, 4, 6, 2), true});
  out.push_back({"block_downsample_f3", build_block_downsample(1, 6, 6, 3), block_average_matrix(1, 6, 6, 3), true});

  const VectorXd u3 = uniform_kernel(3);
  out.push_back({"circular_blur_uniform", build_circular_blur(2, 6, 8, u3),
                 circular_conv_matrix(2, 6, 8, u3 * u3.transpose()), true});
  const VectorXd u5 = uniform_kernel(5);
  out.push_back({"circular_blur_odd_dims", build_circular_blur(1, 5, 7, u5),
                 circular_conv_matrix(1, 5, 7, u5 * u5.transpose()), true});
  MatrixXd skew = random_matrix(3, 3, rng).cwiseAbs();
  skew /= skew.sum();
  out.push_back({"circular_blur_asymmetric", build_circular_blur(1, 6, 6, skew), circular_conv_matrix(1, 6, 6, skew),
                 true});

  out.push_back({"channel_average", build_channel_average(3, 3, 4), channel_average_matrix(3, 4), true});

  const MatrixXd wide = random_matrix(5, 7, rng);
  out.push_back({"dense_wide", build_dense(wide), wide, false});
  const MatrixXd tall = random_matrix(8, 5, rng);
  out.push_back({"dense_tall", build_dense(tall), tall, false});
  const MatrixXd low = random_rank_matrix(6, 9, 3, rng);
  out.push_back({"dense_rank_deficient", build_dense(low), low, false});
  return out;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * double(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = double(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace mas::testing
