#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dcpkt/hashing.hpp"

namespace dcpkt {

using DatasetId = std::uint64_t;

inline constexpr std::size_t kDefaultBlockSize = 16 * 1024;

/// Per-block detection state. `digest` is meaningful only while `valid`.
struct HashBlockMeta {
  bool valid = false;  // block has a representation in the checkpoint file
  bool dirty = false;  // set by detection, cleared by commit_hashes
  Digest digest;
};

/// Bytes of tracker memory per block: the digest plus the two flags.
constexpr std::size_t metadata_bytes_per_block(HashAlgorithm alg) noexcept {
  return digest_width(alg) + 2;
}

struct DatasetDescriptor {
  DatasetId id = 0;
  std::uint64_t size_bytes = 0;
  std::uint64_t block_size = kDefaultBlockSize;
  HashAlgorithm algorithm = HashAlgorithm::md5;
  std::vector<HashBlockMeta> blocks;
  std::uint64_t committed_size_bytes = 0;

  std::size_t block_count() const noexcept { return blocks.size(); }
  std::uint64_t block_offset(std::size_t index) const noexcept { return index * block_size; }
  /// Length of block `index`; only the tail block can be shorter than b.
  std::uint64_t block_length(std::size_t index) const noexcept;
  std::size_t metadata_bytes() const noexcept {
    return blocks.size() * metadata_bytes_per_block(algorithm);
  }
};

constexpr std::size_t blocks_for(std::uint64_t size, std::uint64_t block_size) noexcept {
  return static_cast<std::size_t>((size + block_size - 1) / block_size);
}

DatasetDescriptor make_dataset(DatasetId id, std::uint64_t block_size, HashAlgorithm alg);

struct DirtyRegion {
  DatasetId dataset_id = 0;
  std::uint64_t offset_bytes = 0;
  std::uint64_t length_bytes = 0;

  friend bool operator==(const DirtyRegion&, const DirtyRegion&) = default;
};

struct DirtyScan {
  DirtyRegion region;
  std::size_t next_cursor;  // one past the last block of the region
};

/// Resizes the block array. Blocks extending past the committed size become
/// invalid, including the one straddling the old boundary; shrinking drops
/// trailing entries and leaves survivors alone.
void register_blocks(DatasetDescriptor& ds, std::uint64_t new_size_bytes);

/// Emits the next maximal run of invalid or hash-mismatched blocks at or after
/// `cursor`. Stored digests are left untouched; mismatched blocks get their
/// dirty flag set. Throws ValidationError for a cursor past the block count or
/// a data view whose length differs from the dataset size.
std::optional<DirtyScan> next_dirty_region(DatasetDescriptor& ds, std::span<const std::byte> data,
                                           std::size_t cursor);

/// Rehashes every invalid or dirty block, marks it valid and clean, and records
/// the current size as committed. Must only follow a successful file commit.
void commit_hashes(DatasetDescriptor& ds, std::span<const std::byte> data);

/// Marks every block invalid so the next update rewrites and rehashes it.
void invalidate_all(DatasetDescriptor& ds);

struct DirtyStats {
  std::size_t dirty_blocks = 0;  // dirty or invalid
  std::size_t total_blocks = 0;

  double fraction() const noexcept {
    return total_blocks == 0 ? 0.0
                             : static_cast<double>(dirty_blocks) / static_cast<double>(total_blocks);
  }
};

/// n_d over a set of datasets without touching any flag. `data[i]` is the
/// current view of `datasets[i]`.
DirtyStats dirty_stats(std::span<const DatasetDescriptor> datasets,
                       std::span<const std::span<const std::byte>> data);

}  // namespace dcpkt
