#include "dcpkt/container_format.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>
#include <string>

#include "dcpkt/error.hpp"

namespace dcpkt {

namespace {

constexpr std::size_t kStreamChunk = 8 << 20;

Digest zero_digest(HashAlgorithm alg) {
  const std::array<std::uint8_t, kMaxDigestWidth> zeros{};
  return Digest(alg, std::span<const std::uint8_t>(zeros.data(), digest_width(alg)));
}

class Encoder {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<std::byte>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, std::byte{0}); }
  void raw(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t b : bytes) u8(b);
  }
  void digest(const Digest& d) {
    raw(d.bytes());
    zeros(kDigestFieldSize - d.width());
  }
  std::vector<std::byte>& bytes() { return out_; }

 private:
  std::vector<std::byte> out_;
};

class Decoder {
 public:
  explicit Decoder(std::span<const std::byte> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(in_[pos_++]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  void skip(std::size_t n) { pos_ += n; }
  Digest digest(HashAlgorithm alg) {
    std::array<std::uint8_t, kDigestFieldSize> raw{};
    for (auto& b : raw) b = u8();
    return Digest(alg, std::span<const std::uint8_t>(raw.data(), digest_width(alg)));
  }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> encode_file_meta_prefix(const FileMeta& meta) {
  Encoder e;
  e.raw(kFileMagic);
  e.u32(meta.version);
  e.u32(0);
  e.u64(meta.block_size);
  e.u8(static_cast<std::uint8_t>(meta.algorithm));
  e.zeros(7);
  e.u64(meta.checkpoint_id);
  e.u64(meta.datasets.size());
  for (const auto& d : meta.datasets) {
    e.u64(d.id);
    e.u64(d.size);
  }
  return std::move(e.bytes());
}

void fill_chunk_sizes(FileLayout& layout, DatasetId id, std::uint64_t size) {
  std::uint64_t start = 0;
  for (std::size_t idx : layout.containers_of(id)) {
    ChunkMeta& c = layout.entries[idx].chunk;
    c.chunk_size = size > start ? std::min(c.container_size, size - start) : 0;
    start += c.container_size;
  }
}

void append_container(FileLayout& layout, DatasetId id, std::uint32_t index, std::uint64_t size,
                      HashAlgorithm alg) {
  const std::uint64_t record = layout.file_size();
  LayoutEntry entry;
  entry.chunk = {id, index, 0, size, zero_digest(alg)};
  entry.container = {id, index, size, record + kChunkMetaSize};
  layout.entries.push_back(entry);
}

void validate_structure(const FileLayout& layout) {
  std::map<DatasetId, std::uint32_t> next_index;
  for (const auto& d : layout.meta.datasets) next_index[d.id] = 0;
  if (next_index.size() != layout.meta.datasets.size()) {
    throw CorruptionError("duplicate dataset id in file metadata");
  }
  for (std::size_t i = 1; i < layout.meta.datasets.size(); ++i) {
    if (layout.meta.datasets[i - 1].id >= layout.meta.datasets[i].id) {
      throw CorruptionError("dataset table is not sorted by id");
    }
  }
  for (const auto& e : layout.entries) {
    auto it = next_index.find(e.chunk.dataset_id);
    if (it == next_index.end()) {
      throw CorruptionError("container for unknown dataset " + std::to_string(e.chunk.dataset_id));
    }
    if (e.chunk.container_index != it->second) {
      throw CorruptionError("container indices of dataset " + std::to_string(e.chunk.dataset_id) +
                            " are not contiguous");
    }
    ++it->second;
    if (e.chunk.chunk_size > e.chunk.container_size) {
      throw CorruptionError("chunk larger than its container in dataset " +
                            std::to_string(e.chunk.dataset_id));
    }
  }
  for (const auto& d : layout.meta.datasets) {
    std::uint64_t live = 0;
    std::uint64_t capacity = 0;
    for (std::size_t idx : layout.containers_of(d.id)) {
      const ChunkMeta& c = layout.entries[idx].chunk;
      // Linear fill: a container holds data only if every earlier one is full.
      if (c.chunk_size > 0 && live != capacity) {
        throw CorruptionError("dataset " + std::to_string(d.id) + " is not filled linearly");
      }
      live += c.chunk_size;
      capacity += c.container_size;
    }
    if (live != d.size) {
      throw CorruptionError("committed size of dataset " + std::to_string(d.id) +
                            " disagrees with its chunk sizes");
    }
  }
}

}  // namespace

std::uint64_t FileLayout::file_size() const noexcept {
  if (entries.empty()) return header_size();
  const auto& last = entries.back().container;
  return last.file_offset + last.container_size;
}

std::optional<std::uint64_t> FileLayout::committed_size(DatasetId id) const noexcept {
  for (const auto& d : meta.datasets) {
    if (d.id == id) return d.size;
  }
  return std::nullopt;
}

std::uint64_t FileLayout::capacity(DatasetId id) const noexcept {
  std::uint64_t total = 0;
  for (const auto& e : entries) {
    if (e.container.dataset_id == id) total += e.container.container_size;
  }
  return total;
}

std::vector<std::size_t> FileLayout::containers_of(DatasetId id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].container.dataset_id == id) out.push_back(i);
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    return entries[a].container.container_index < entries[b].container.container_index;
  });
  return out;
}

std::uint64_t FileLayout::logical_start(std::size_t entry_index) const {
  const VirtualContainer& target = entries.at(entry_index).container;
  std::uint64_t start = 0;
  for (const auto& e : entries) {
    if (e.container.dataset_id == target.dataset_id &&
        e.container.container_index < target.container_index) {
      start += e.container.container_size;
    }
  }
  return start;
}

FileLayout plan_layout(const std::optional<FileLayout>& previous,
                       std::span<const DatasetExtent> datasets, const LayoutParams& params) {
  std::vector<DatasetExtent> sorted(datasets.begin(), datasets.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const DatasetExtent& a, const DatasetExtent& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].id == sorted[i].id) {
      throw LayoutError("duplicate dataset id " + std::to_string(sorted[i].id));
    }
  }

  FileLayout layout;
  layout.meta.block_size = params.block_size;
  layout.meta.algorithm = params.algorithm;
  layout.meta.checkpoint_id = params.checkpoint_id;
  layout.meta.datasets = sorted;
  layout.meta.meta_checksum = zero_digest(params.algorithm);

  if (previous) {
    for (const auto& d : previous->meta.datasets) {
      const bool present = std::any_of(sorted.begin(), sorted.end(),
                                       [&](const DatasetExtent& s) { return s.id == d.id; });
      if (!present) {
        throw LayoutError("dataset " + std::to_string(d.id) +
                          " vanished from the protected set without deregistration");
      }
    }
    const std::int64_t shift = static_cast<std::int64_t>(layout.header_size()) -
                               static_cast<std::int64_t>(previous->header_size());
    for (LayoutEntry e : previous->entries) {
      e.container.file_offset = static_cast<std::uint64_t>(
          static_cast<std::int64_t>(e.container.file_offset) + shift);
      if (e.chunk.payload_checksum.algorithm() != params.algorithm) {
        e.chunk.payload_checksum = zero_digest(params.algorithm);
      }
      layout.entries.push_back(e);
    }
  }

  for (const auto& d : sorted) {
    const std::uint64_t capacity = layout.capacity(d.id);
    if (d.size > capacity) {
      const auto index = static_cast<std::uint32_t>(layout.containers_of(d.id).size());
      append_container(layout, d.id, index, d.size - capacity, params.algorithm);
    }
    fill_chunk_sizes(layout, d.id, d.size);
  }
  return layout;
}

std::vector<PhysicalExtent> logical_to_physical(const FileLayout& layout, DatasetId id,
                                                std::uint64_t offset, std::uint64_t length) {
  const std::uint64_t capacity = layout.capacity(id);
  if (offset > capacity || length > capacity - offset) {
    throw LayoutError("range [" + std::to_string(offset) + ", +" + std::to_string(length) +
                      ") exceeds the " + std::to_string(capacity) + "-byte capacity of dataset " +
                      std::to_string(id));
  }
  std::vector<PhysicalExtent> out;
  std::uint64_t start = 0;
  for (std::size_t idx : layout.containers_of(id)) {
    if (length == 0) break;
    const VirtualContainer& c = layout.entries[idx].container;
    const std::uint64_t end = start + c.container_size;
    if (offset < end) {
      const std::uint64_t within = offset - start;
      const std::uint64_t span = std::min(length, c.container_size - within);
      out.push_back({c.file_offset + within, span});
      offset += span;
      length -= span;
    }
    start = end;
  }
  return out;
}

std::array<std::byte, kChunkMetaSize> encode_chunk_meta(const ChunkMeta& chunk) {
  Encoder e;
  e.u64(chunk.dataset_id);
  e.u32(chunk.container_index);
  e.u32(0);
  e.u64(chunk.chunk_size);
  e.u64(chunk.container_size);
  e.digest(chunk.payload_checksum);
  e.zeros(16);
  std::array<std::byte, kChunkMetaSize> out{};
  std::copy(e.bytes().begin(), e.bytes().end(), out.begin());
  return out;
}

Digest compute_meta_checksum(const FileLayout& layout) {
  Hasher h(layout.meta.algorithm);
  h.update(encode_file_meta_prefix(layout.meta));
  for (const auto& e : layout.entries) {
    const auto record = encode_chunk_meta(e.chunk);
    h.update(std::span<const std::byte>(record));
  }
  return h.finish();
}

std::vector<std::byte> encode_file_meta(const FileLayout& layout) {
  std::vector<std::byte> out = encode_file_meta_prefix(layout.meta);
  Encoder e;
  e.digest(compute_meta_checksum(layout));
  out.insert(out.end(), e.bytes().begin(), e.bytes().end());
  return out;
}

Digest compute_payload_checksum(HashAlgorithm alg, const PayloadSource& source, DatasetId id,
                                std::uint64_t logical_start, std::uint64_t chunk_size) {
  Hasher h(alg);
  std::vector<std::byte> buffer(static_cast<std::size_t>(std::min<std::uint64_t>(chunk_size, kStreamChunk)));
  for (std::uint64_t done = 0; done < chunk_size;) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kStreamChunk, chunk_size - done));
    std::span<std::byte> piece(buffer.data(), n);
    source(id, logical_start + done, piece);
    h.update(std::span<const std::byte>(piece));
    done += n;
  }
  return h.finish();
}

FileLayout write_layout(File& file, const FileLayout& planned, const PayloadSource& source) {
  FileLayout layout = planned;
  std::vector<std::byte> buffer;
  for (std::size_t i = 0; i < layout.entries.size(); ++i) {
    LayoutEntry& e = layout.entries[i];
    const std::uint64_t start = layout.logical_start(i);
    Hasher h(layout.meta.algorithm);
    for (std::uint64_t done = 0; done < e.container.container_size;) {
      const std::size_t n = static_cast<std::size_t>(
          std::min<std::uint64_t>(kStreamChunk, e.container.container_size - done));
      buffer.assign(n, std::byte{0});
      if (done < e.chunk.chunk_size) {
        const std::size_t live =
            static_cast<std::size_t>(std::min<std::uint64_t>(n, e.chunk.chunk_size - done));
        source(e.chunk.dataset_id, start + done, std::span<std::byte>(buffer.data(), live));
        h.update(std::span<const std::byte>(buffer.data(), live));
      }
      file.pwrite_all(buffer, e.container.file_offset + done);
      done += n;
    }
    e.chunk.payload_checksum = h.finish();
    const auto record = encode_chunk_meta(e.chunk);
    file.pwrite_all(record, e.container.file_offset - kChunkMetaSize);
  }
  const std::vector<std::byte> header = encode_file_meta(layout);
  file.pwrite_all(header, 0);
  layout.meta.meta_checksum = compute_meta_checksum(layout);
  return layout;
}

ParsedFile inspect_layout(const File& file) {
  const std::uint64_t size = file.size();
  if (size < kFileMetaFixedSize) throw CorruptionError("file too short for FileMeta");

  std::array<std::byte, kFileMetaFixedSize> fixed{};
  file.pread_exact(fixed, 0);
  if (std::memcmp(fixed.data(), kFileMagic.data(), kFileMagic.size()) != 0) {
    throw CorruptionError("bad magic in " + file.path().string());
  }
  Decoder d(fixed);
  d.skip(kFileMagic.size());
  ParsedFile parsed;
  FileLayout& layout = parsed.layout;
  layout.meta.version = d.u32();
  if (layout.meta.version != kFormatVersion) {
    throw CorruptionError("unsupported format version " + std::to_string(layout.meta.version));
  }
  d.skip(4);
  layout.meta.block_size = d.u64();
  const auto alg = hash_algorithm_from_tag(d.u8());
  if (!alg) throw CorruptionError("unknown hash algorithm tag");
  layout.meta.algorithm = *alg;
  d.skip(7);
  layout.meta.checkpoint_id = d.u64();
  const std::uint64_t count = d.u64();
  if (count > (size - kFileMetaFixedSize) / 16) throw CorruptionError("truncated dataset table");
  const std::uint64_t header = file_meta_size(count);
  if (header > size) throw CorruptionError("truncated FileMeta");

  std::vector<std::byte> rest(static_cast<std::size_t>(header - kFileMetaFixedSize));
  file.pread_exact(rest, kFileMetaFixedSize);
  Decoder t(rest);
  for (std::uint64_t i = 0; i < count; ++i) {
    DatasetExtent ext;
    ext.id = t.u64();
    ext.size = t.u64();
    layout.meta.datasets.push_back(ext);
  }
  layout.meta.meta_checksum = t.digest(layout.meta.algorithm);

  std::uint64_t offset = header;
  while (offset < size) {
    if (size - offset < kChunkMetaSize) throw CorruptionError("truncated ChunkMeta record");
    std::array<std::byte, kChunkMetaSize> record{};
    file.pread_exact(record, offset);
    Decoder c(record);
    LayoutEntry e;
    e.chunk.dataset_id = c.u64();
    e.chunk.container_index = c.u32();
    c.skip(4);
    e.chunk.chunk_size = c.u64();
    e.chunk.container_size = c.u64();
    e.chunk.payload_checksum = c.digest(layout.meta.algorithm);
    e.container = {e.chunk.dataset_id, e.chunk.container_index, e.chunk.container_size,
                   offset + kChunkMetaSize};
    if (e.chunk.container_size > size - e.container.file_offset) {
      throw CorruptionError("truncated payload of dataset " + std::to_string(e.chunk.dataset_id) +
                            " container " + std::to_string(e.chunk.container_index));
    }
    offset = e.container.file_offset + e.chunk.container_size;
    layout.entries.push_back(e);
  }

  parsed.meta_checksum_ok = compute_meta_checksum(layout) == layout.meta.meta_checksum;
  if (!parsed.meta_checksum_ok) return parsed;
  validate_structure(layout);

  std::vector<std::byte> buffer;
  for (const auto& e : layout.entries) {
    Hasher h(layout.meta.algorithm);
    for (std::uint64_t done = 0; done < e.chunk.chunk_size;) {
      const std::size_t n =
          static_cast<std::size_t>(std::min<std::uint64_t>(kStreamChunk, e.chunk.chunk_size - done));
      buffer.resize(n);
      file.pread_exact(buffer, e.container.file_offset + done);
      h.update(std::span<const std::byte>(buffer));
      done += n;
    }
    parsed.payload_ok.push_back(h.finish() == e.chunk.payload_checksum);
  }
  return parsed;
}

FileLayout read_layout(const File& file) {
  ParsedFile parsed = inspect_layout(file);
  if (!parsed.meta_checksum_ok) {
    throw CorruptionError("metadata checksum mismatch in " + file.path().string());
  }
  for (std::size_t i = 0; i < parsed.payload_ok.size(); ++i) {
    if (!parsed.payload_ok[i]) {
      const ChunkMeta& c = parsed.layout.entries[i].chunk;
      throw PayloadChecksumError(c.dataset_id, c.container_index);
    }
  }
  return std::move(parsed.layout);
}

std::vector<std::byte> read_dataset(const File& file, const FileLayout& layout, DatasetId id) {
  const auto size = layout.committed_size(id);
  if (!size) throw LayoutError("dataset " + std::to_string(id) + " not in checkpoint");
  std::vector<std::byte> out(static_cast<std::size_t>(*size));
  std::uint64_t pos = 0;
  for (const auto& ext : logical_to_physical(layout, id, 0, *size)) {
    file.pread_exact(std::span<std::byte>(out.data() + pos, ext.length), ext.file_offset);
    pos += ext.length;
  }
  return out;
}

}  // namespace dcpkt
