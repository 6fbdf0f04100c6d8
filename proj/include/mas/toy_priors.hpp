#pragma once

// Desk-scale image prior: an equal-weight mixture of isotropic Gaussians
// centred on smooth synthetic templates (a low-frequency cosine plus a disk).

#include "mas/prior.hpp"
#include "mas/types.hpp"

#include <cstdint>
#include <vector>

namespace mas {

/// Deterministic template images with values in [0.05, 0.95].
std::vector<Image> make_templates(const ImageShape& shape, Index count, std::uint64_t seed);

GaussianMixturePriorD template_bank_prior(const ImageShape& shape, Index count, double tau, std::uint64_t seed);

}  // namespace mas
