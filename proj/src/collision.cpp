#include "dcpkt/collision.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "dcpkt/error.hpp"

namespace dcpkt {

namespace {

struct Shard {
  std::size_t block_size;
  std::uint64_t pattern;
  std::uint64_t index;
};

std::vector<CollisionRow> run_shard(const CollisionConfig& cfg, const Shard& shard) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed),
                    static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                    static_cast<std::uint32_t>(shard.index)};
  std::mt19937_64 rng(seq);

  const std::size_t elements = shard.block_size / 8;
  std::vector<std::uint64_t> block(elements);
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(block.data()),
                                            shard.block_size);

  std::vector<Digest> reference(cfg.algorithms.size());
  std::vector<std::uint64_t> collisions(cfg.algorithms.size(), 0);

  std::uint64_t done = 0;
  while (done < cfg.iterations) {
    for (auto& e : block) e = rng();
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      reference[a] = hash_block(cfg.algorithms[a], bytes);
    }
    for (std::size_t i = 0; i < elements && done < cfg.iterations; ++i, ++done) {
      const std::uint64_t original = block[i];
      block[i] = original ^ shard.pattern;
      for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
        if (hash_block(cfg.algorithms[a], bytes) == reference[a]) ++collisions[a];
      }
      block[i] = original;
    }
  }

  std::vector<CollisionRow> rows;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    rows.push_back({cfg.algorithms[a], shard.block_size, shard.pattern, cfg.iterations,
                    collisions[a]});
  }
  return rows;
}

}  // namespace

const CollisionRow* CollisionReport::find(HashAlgorithm alg, std::size_t b,
                                          std::uint64_t pattern) const noexcept {
  auto it = std::find_if(rows.begin(), rows.end(), [&](const CollisionRow& r) {
    return r.algorithm == alg && r.block_size == b && r.pattern == pattern;
  });
  return it == rows.end() ? nullptr : &*it;
}

void CollisionReport::write_csv(std::ostream& out) const {
  out << "algorithm,block_size,pattern,iterations,collisions,rate\n";
  for (const auto& r : rows) {
    std::ostringstream pat;
    pat << "0x" << std::hex << r.pattern;
    std::ostringstream rate;
    rate << std::setprecision(6) << r.rate();
    out << to_string(r.algorithm) << ',' << r.block_size << ',' << pat.str() << ','
        << r.iterations << ',' << r.collisions << ',' << rate.str() << '\n';
  }
}

CollisionReport avalanche_collision_test(const CollisionConfig& config) {
  if (config.iterations == 0) throw ValidationError("collision test needs iterations > 0");
  if (config.algorithms.empty() || config.block_sizes.empty() || config.patterns.empty()) {
    throw ValidationError("collision test needs algorithms, block sizes and patterns");
  }
  for (std::size_t b : config.block_sizes) {
    if (b == 0 || b % 8 != 0) {
      throw ValidationError("block size " + std::to_string(b) + " is not a positive multiple of 8");
    }
  }

  std::vector<Shard> shards;
  for (std::size_t b : config.block_sizes) {
    for (std::uint64_t p : config.patterns) shards.push_back({b, p, shards.size()});
  }

  std::vector<std::vector<CollisionRow>> results(shards.size());
  unsigned workers = config.workers ? config.workers : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(shards.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < shards.size(); i = next++) {
      try {
        results[i] = run_shard(config, shards[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  CollisionReport report;
  for (auto& rows : results) {
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

}  // namespace dcpkt
