#pragma once

#include <cstdint>
#include <random>

namespace lmf {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of stream `stream`, replicate `index` under `master`:
///   splitmix64(splitmix64(master ^ splitmix64(stream)) + index).
/// Distinct (stream, index) pairs never share an engine state sequence in
/// practice; stream 0 is used for replicates, higher streams for auxiliary
/// samples (plug-in means, independent re-estimation).
constexpr Seed derive_seed(Seed master, std::uint64_t index, std::uint64_t stream = 0) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

inline Engine make_engine(Seed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Engine(seq);
}

}  // namespace lmf
