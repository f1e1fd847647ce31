#pragma once

#include <cstdint>
#include <random>

namespace fsgauge {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; bijective mixing of a 64-bit word.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `index` under `seed`. Independent of evaluation order, so
/// batches of episodes give the same draws at any thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Two-level derivation, e.g. (global seed, grid point, episode).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace fsgauge
