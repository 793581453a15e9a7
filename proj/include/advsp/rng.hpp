// advsp/rng.hpp
// Seed derivation and deterministic random draws shared by every module.

#ifndef ADVSP_RNG_HPP
#define ADVSP_RNG_HPP

#include <cstdint>
#include <random>

namespace advsp {

// splitmix64 finalizer; stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and an index.
// Batches stay order-independent because each item owns its stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace advsp

#endif  // ADVSP_RNG_HPP
