#pragma once

#include "npsvc/dataset.hpp"

#include <cstdint>

namespace npsvc {

/// K isotropic Gaussian blobs with unit spread, centers evenly spaced on a
/// circle of radius `radius` in the first two coordinates. Labels 1..K,
/// samples dealt round-robin over classes.
Dataset make_blobs(Index n, int num_classes, Index dim, double radius, std::uint64_t seed);

/// Two interleaved half circles in 2-D with Gaussian noise. Labels 1 and 2.
Dataset make_two_moons(Index n, double noise, std::uint64_t seed);

}  // namespace npsvc
