#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dcpkt/block_tracker.hpp"
#include "dcpkt/file_io.hpp"
#include "dcpkt/hashing.hpp"

// Checkpoint file layout. All integers little-endian.
//
//   FileMeta   magic[8] "DCPKT\0\0\1" | version u32 | pad u32 | block_size u64
//              | alg u8 | pad[7] | checkpoint_id u64 | dataset_count u64
//              | dataset_count x (dataset_id u64, committed_size u64)
//              | meta_checksum[16]
//   entry*     ChunkMeta[64]: dataset_id u64 | container_index u32 | pad u32
//              | chunk_size u64 | container_size u64 | payload_checksum[16]
//              | reserved[16]
//              payload[container_size]
//
// Digests narrower than 16 bytes are zero padded. meta_checksum covers the
// FileMeta bytes before it followed by every ChunkMeta record in file order;
// payload_checksum covers the first chunk_size bytes of the container.

namespace dcpkt {

inline constexpr std::array<std::uint8_t, 8> kFileMagic = {'D', 'C', 'P', 'K', 'T', 0, 0, 1};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kChunkMetaSize = 64;
inline constexpr std::size_t kFileMetaFixedSize = 48;
inline constexpr std::size_t kDigestFieldSize = 16;

constexpr std::uint64_t file_meta_size(std::uint64_t dataset_count) noexcept {
  return kFileMetaFixedSize + 16 * dataset_count + kDigestFieldSize;
}

/// Immutable slice of the file holding part of one dataset.
struct VirtualContainer {
  DatasetId dataset_id = 0;
  std::uint32_t container_index = 0;
  std::uint64_t container_size = 0;
  std::uint64_t file_offset = 0;  // absolute offset of the payload

  friend bool operator==(const VirtualContainer&, const VirtualContainer&) = default;
};

struct ChunkMeta {
  DatasetId dataset_id = 0;
  std::uint32_t container_index = 0;
  std::uint64_t chunk_size = 0;  // live bytes at the last commit
  std::uint64_t container_size = 0;
  Digest payload_checksum;

  friend bool operator==(const ChunkMeta&, const ChunkMeta&) = default;
};

struct DatasetExtent {
  DatasetId id = 0;
  std::uint64_t size = 0;

  friend bool operator==(const DatasetExtent&, const DatasetExtent&) = default;
};

struct FileMeta {
  std::uint32_t version = kFormatVersion;
  std::uint64_t block_size = kDefaultBlockSize;
  HashAlgorithm algorithm = HashAlgorithm::md5;
  std::uint64_t checkpoint_id = 0;
  std::vector<DatasetExtent> datasets;  // ascending id, committed sizes
  Digest meta_checksum;

  friend bool operator==(const FileMeta&, const FileMeta&) = default;
};

struct LayoutEntry {
  ChunkMeta chunk;
  VirtualContainer container;

  friend bool operator==(const LayoutEntry&, const LayoutEntry&) = default;
};

struct FileLayout {
  FileMeta meta;
  std::vector<LayoutEntry> entries;  // file order

  std::uint64_t header_size() const noexcept { return file_meta_size(meta.datasets.size()); }
  /// Offset one past the last payload byte.
  std::uint64_t file_size() const noexcept;
  std::optional<std::uint64_t> committed_size(DatasetId id) const noexcept;
  /// Sum of the dataset's container sizes.
  std::uint64_t capacity(DatasetId id) const noexcept;
  /// Indices into `entries` for the dataset, ordered by container_index.
  std::vector<std::size_t> containers_of(DatasetId id) const;
  /// Logical offset at which the given entry's container starts.
  std::uint64_t logical_start(std::size_t entry_index) const;

  friend bool operator==(const FileLayout&, const FileLayout&) = default;
};

struct LayoutParams {
  std::uint64_t block_size = kDefaultBlockSize;
  HashAlgorithm algorithm = HashAlgorithm::md5;
  std::uint64_t checkpoint_id = 0;
};

/// Plans the next file layout. Without `previous` every non-empty dataset
/// gets one container of its current size. With `previous`, existing
/// containers are carried over unchanged and a dataset that outgrew its
/// containers gets one extra container of the excess appended at the file
/// tail. A dataset id absent from `datasets` but present in `previous` is a
/// LayoutError. New dataset ids enlarge FileMeta, which shifts every payload
/// offset; callers that patch a copy of the previous file must treat that as
/// a full rewrite.
FileLayout plan_layout(const std::optional<FileLayout>& previous,
                       std::span<const DatasetExtent> datasets, const LayoutParams& params);

struct PhysicalExtent {
  std::uint64_t file_offset = 0;
  std::uint64_t length = 0;

  friend bool operator==(const PhysicalExtent&, const PhysicalExtent&) = default;
};

/// Maps a logical dataset range onto file extents, split at container
/// boundaries. Throws LayoutError if the range exceeds the dataset's capacity.
std::vector<PhysicalExtent> logical_to_physical(const FileLayout& layout, DatasetId id,
                                                std::uint64_t offset, std::uint64_t length);

/// Fills `out` with dataset bytes starting at `logical_offset`.
using PayloadSource =
    std::function<void(DatasetId id, std::uint64_t logical_offset, std::span<std::byte> out)>;

std::array<std::byte, kChunkMetaSize> encode_chunk_meta(const ChunkMeta& chunk);
/// FileMeta bytes with the meta checksum computed from `layout`.
std::vector<std::byte> encode_file_meta(const FileLayout& layout);
Digest compute_meta_checksum(const FileLayout& layout);

/// Checksum over the live prefix of one container read through `source`.
Digest compute_payload_checksum(HashAlgorithm alg, const PayloadSource& source, DatasetId id,
                                std::uint64_t logical_start, std::uint64_t chunk_size);

/// Writes the whole file from offset 0 and returns the layout with payload
/// and meta checksums filled in. Container bytes past the live prefix are zero.
FileLayout write_layout(File& file, const FileLayout& planned, const PayloadSource& source);

/// Result of parsing without throwing on checksum mismatches.
struct ParsedFile {
  FileLayout layout;
  bool meta_checksum_ok = false;
  std::vector<bool> payload_ok;  // parallel to layout.entries
};

/// Parses structure, throwing CorruptionError on bad magic/version, truncation
/// or inconsistent structure; checksum results are reported, not thrown.
ParsedFile inspect_layout(const File& file);

/// Parses and fully validates a committed checkpoint file.
FileLayout read_layout(const File& file);

/// Reads the live bytes of one dataset from a validated file.
std::vector<std::byte> read_dataset(const File& file, const FileLayout& layout, DatasetId id);

}  // namespace dcpkt
