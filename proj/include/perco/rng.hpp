#pragma once

#include <array>
#include <cstdint>

namespace perco {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3").  A pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Two independent uniforms in (0, 1) for variables 2*block and 2*block+1 of
/// replicate `replicate` under `seed`.
std::array<double, 2> uniform_pair(std::uint64_t seed, std::uint64_t replicate,
                                   std::uint64_t block);

/// Uniform in (0, 1) attached to one variable.  Same value as the matching
/// half of uniform_pair.
double uniform_at(std::uint64_t seed, std::uint64_t replicate, std::uint64_t index);

}  // namespace perco
