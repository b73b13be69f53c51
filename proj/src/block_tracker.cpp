#include "dcpkt/block_tracker.hpp"

#include <algorithm>
#include <string>

#include "dcpkt/error.hpp"

namespace dcpkt {

namespace {

std::span<const std::byte> block_bytes(const DatasetDescriptor& ds, std::span<const std::byte> data,
                                       std::size_t index) {
  return data.subspan(ds.block_offset(index), ds.block_length(index));
}

bool block_needs_update(DatasetDescriptor& ds, std::span<const std::byte> data, std::size_t index) {
  HashBlockMeta& meta = ds.blocks[index];
  if (!meta.valid) return true;
  if (hash_block(ds.algorithm, block_bytes(ds, data, index)) == meta.digest) return false;
  meta.dirty = true;
  return true;
}

void check_view(const DatasetDescriptor& ds, std::span<const std::byte> data) {
  if (data.size() != ds.size_bytes) {
    throw ValidationError("data view of " + std::to_string(data.size()) + " bytes for dataset " +
                          std::to_string(ds.id) + " of " + std::to_string(ds.size_bytes) +
                          " bytes");
  }
}

}  // namespace

std::uint64_t DatasetDescriptor::block_length(std::size_t index) const noexcept {
  const std::uint64_t start = block_offset(index);
  return std::min(block_size, size_bytes - start);
}

DatasetDescriptor make_dataset(DatasetId id, std::uint64_t block_size, HashAlgorithm alg) {
  if (block_size == 0) throw ValidationError("block size must be positive");
  DatasetDescriptor ds;
  ds.id = id;
  ds.block_size = block_size;
  ds.algorithm = alg;
  return ds;
}

void register_blocks(DatasetDescriptor& ds, std::uint64_t new_size_bytes) {
  ds.size_bytes = new_size_bytes;
  ds.blocks.resize(blocks_for(new_size_bytes, ds.block_size));
  for (std::size_t i = 0; i < ds.blocks.size(); ++i) {
    const std::uint64_t end = ds.block_offset(i) + ds.block_length(i);
    if (end > ds.committed_size_bytes) {
      ds.blocks[i].valid = false;
      ds.blocks[i].dirty = false;
    }
  }
}

std::optional<DirtyScan> next_dirty_region(DatasetDescriptor& ds, std::span<const std::byte> data,
                                           std::size_t cursor) {
  check_view(ds, data);
  const std::size_t n = ds.block_count();
  if (cursor > n) {
    throw ValidationError("cursor " + std::to_string(cursor) + " past block count " +
                          std::to_string(n));
  }

  std::size_t first = cursor;
  while (first < n && !block_needs_update(ds, data, first)) ++first;
  if (first == n) return std::nullopt;

  std::size_t last = first + 1;
  while (last < n && block_needs_update(ds, data, last)) ++last;

  const std::uint64_t offset = ds.block_offset(first);
  const std::uint64_t end = ds.block_offset(last - 1) + ds.block_length(last - 1);
  return DirtyScan{{ds.id, offset, end - offset}, last};
}

void commit_hashes(DatasetDescriptor& ds, std::span<const std::byte> data) {
  check_view(ds, data);
  for (std::size_t i = 0; i < ds.blocks.size(); ++i) {
    HashBlockMeta& meta = ds.blocks[i];
    if (meta.valid && !meta.dirty) continue;
    meta.digest = hash_block(ds.algorithm, block_bytes(ds, data, i));
    meta.valid = true;
    meta.dirty = false;
  }
  ds.committed_size_bytes = ds.size_bytes;
}

void invalidate_all(DatasetDescriptor& ds) {
  for (auto& meta : ds.blocks) {
    meta.valid = false;
    meta.dirty = false;
  }
}

DirtyStats dirty_stats(std::span<const DatasetDescriptor> datasets,
                       std::span<const std::span<const std::byte>> data) {
  if (datasets.size() != data.size()) {
    throw ValidationError("dirty_stats needs one data view per dataset");
  }
  DirtyStats stats;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const DatasetDescriptor& ds = datasets[d];
    check_view(ds, data[d]);
    stats.total_blocks += ds.block_count();
    for (std::size_t i = 0; i < ds.block_count(); ++i) {
      const HashBlockMeta& meta = ds.blocks[i];
      if (!meta.valid || meta.dirty ||
          hash_block(ds.algorithm, block_bytes(ds, data[d], i)) != meta.digest) {
        ++stats.dirty_blocks;
      }
    }
  }
  return stats;
}

}  // namespace dcpkt
