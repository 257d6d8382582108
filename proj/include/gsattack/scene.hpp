#pragma once

#include <cstdint>

#include "gsattack/splat.hpp"

namespace gsattack {

/// Deterministic test scene: `count` kernels scattered over a sphere
/// shell of radius 1 with a smooth colour field plus per-kernel noise.
SplatModel make_synthetic_scene(std::size_t count, std::uint64_t seed);

/// Kernels with every field drawn at random (finite, unit quaternions).
SplatModel make_random_model(std::size_t count, std::uint64_t seed);

}  // namespace gsattack
