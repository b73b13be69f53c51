#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dcpkt/hashing.hpp"

namespace dcpkt {

/// The arbitrary-change pattern used as p5.
inline constexpr std::uint64_t kArbitraryPattern = 0x9E3779B97F4A7C15ull;

/// p0..p5: flips of the lowest 1, 2, 8, 12 and 16 bits, plus an arbitrary change.
inline constexpr std::uint64_t kDefaultPatterns[] = {0x1, 0x3, 0xff, 0xfff, 0xffff,
                                                     kArbitraryPattern};

struct CollisionConfig {
  std::vector<HashAlgorithm> algorithms;
  std::vector<std::size_t> block_sizes;
  std::vector<std::uint64_t> patterns{std::begin(kDefaultPatterns), std::end(kDefaultPatterns)};
  /// Number of single-element modifications per (block size, pattern). A fresh
  /// random buffer is drawn after every full sweep over its 64-bit elements.
  std::uint64_t iterations = 1'000'000;
  std::uint64_t rng_seed = 0;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;
};

struct CollisionRow {
  HashAlgorithm algorithm;
  std::size_t block_size;
  std::uint64_t pattern;
  std::uint64_t iterations;
  std::uint64_t collisions;

  double rate() const noexcept {
    return static_cast<double>(collisions) / static_cast<double>(iterations);
  }
};

struct CollisionReport {
  std::vector<CollisionRow> rows;

  const CollisionRow* find(HashAlgorithm alg, std::size_t b, std::uint64_t pattern) const noexcept;
  void write_csv(std::ostream& out) const;
};

/// Avalanche collision test: every 64-bit element of a random block is XORed
/// with a pattern in turn, the block is rehashed, and equality with the
/// unmodified block's digest counts as a collision. Shards over
/// (block size, pattern); results depend only on the seed.
CollisionReport avalanche_collision_test(const CollisionConfig& config);

}  // namespace dcpkt
