#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dcpkt/file_io.hpp"

namespace dcpkt {

inline constexpr std::size_t kDefaultCoalescingThreshold = 16u << 20;

struct WriteStats {
  std::uint64_t write_calls = 0;   // positioned writes issued to the file
  std::uint64_t read_calls = 0;    // gap-fill reads
  std::uint64_t payload_bytes = 0; // bytes handed to write()
  std::uint64_t bytes_written = 0; // payload plus gap fill
  std::uint64_t flushes = 0;
  std::vector<std::uint64_t> region_sizes;  // one per write() call
  std::vector<std::uint64_t> write_sizes;   // one per issued write
};

struct CoalescingOptions {
  bool enabled = true;
  std::size_t threshold_bytes = kDefaultCoalescingThreshold;
  /// Extents separated by at most this many bytes are merged into one write;
  /// the gap is read back from the file first so its content is preserved.
  std::size_t max_gap_bytes = 1u << 20;
  /// Artificial per-write delay emulating a target with costly small writes.
  std::chrono::microseconds write_latency{0};
};

/// Buffers small positioned writes and emits them as few large writes.
///
/// Extents must arrive in ascending, non-overlapping file order. With
/// coalescing disabled every write() becomes one positioned write. Either way
/// the resulting file bytes are identical.
class CoalescingWriter {
 public:
  CoalescingWriter(File& file, CoalescingOptions options);

  void write(std::uint64_t file_offset, std::span<const std::byte> data);
  void flush();
  const WriteStats& stats() const noexcept { return stats_; }

 private:
  struct Extent {
    std::uint64_t file_offset;
    std::size_t staged_offset;
    std::size_t length;
  };

  void issue(std::span<const std::byte> data, std::uint64_t offset);
  void flush_run(std::size_t first, std::size_t last);

  File& file_;
  CoalescingOptions options_;
  std::vector<std::byte> staged_;
  std::vector<Extent> extents_;
  std::vector<std::byte> span_buffer_;
  std::uint64_t last_end_ = 0;
  WriteStats stats_;
};

}  // namespace dcpkt
