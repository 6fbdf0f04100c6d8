#include "mas/toy_priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mas {

std::vector<Image> make_templates(const ImageShape& shape, Index count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("make_templates: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Image> out;
  out.reserve(std::size_t(count));
  for (Index j = 0; j < count; ++j) {
    const double fy = 0.5 + 1.5 * unit(rng);
    const double fx = 0.5 + 1.5 * unit(rng);
    const double phase = two_pi * unit(rng);
    const double cy = unit(rng), cx = unit(rng);
    const double radius = 0.15 + 0.2 * unit(rng);
    const double disk = unit(rng) < 0.5 ? -0.25 : 0.25;
    Image img(shape.channels, shape.height, shape.width);
    for (Index c = 0; c < shape.channels; ++c) {
      const double tint = shape.channels == 1 ? 0.0 : 0.1 * (unit(rng) - 0.5);
      for (Index r = 0; r < shape.height; ++r)
        for (Index q = 0; q < shape.width; ++q) {
          const double y = (double(r) + 0.5) / double(shape.height);
          const double x = (double(q) + 0.5) / double(shape.width);
          double v = 0.5 + tint + 0.2 * std::cos(two_pi * (fy * y + fx * x) + phase);
          if ((y - cy) * (y - cy) + (x - cx) * (x - cx) < radius * radius) v += disk;
          img(c, r, q) = std::clamp(v, 0.05, 0.95);
        }
    }
    out.push_back(std::move(img));
  }
  return out;
}

GaussianMixturePriorD template_bank_prior(const ImageShape& shape, Index count, double tau, std::uint64_t seed) {
  if (!(tau > 0.0)) throw std::invalid_argument("template_bank_prior: tau must be positive");
  std::vector<GaussianComponent<double>> comps;
  for (auto& t : make_templates(shape, count, seed)) comps.push_back({1.0 / double(count), std::move(t.data), tau * tau});
  // Equal weights may round to a sum a few ulps away from 1.
  double total = 0;
  for (const auto& c : comps) total += c.weight;
  comps.back().weight += 1.0 - total;
  return GaussianMixturePriorD(std::move(comps));
}

}  // namespace mas
