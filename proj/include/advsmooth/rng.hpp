#pragma once

#include <cstdint>
#include <random>

#include "advsmooth/types.hpp"

namespace advsmooth {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds
/// (per example, per restart, per Langevin iteration) from one master seed.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector uniform_in_box(Rng& rng, const Vector& lo, const Vector& hi);
Vector standard_normal(Rng& rng, std::size_t n);
/// Uniform sample of the ball (L2: rejection from the bounding box up to
/// dimension 4, Gaussian direction with radius eps U^(1/d) above).
Vector uniform_in_ball(Rng& rng, std::size_t dim, const NormBall& ball);

}  // namespace advsmooth
