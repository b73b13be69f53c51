#include "dcpkt/coalescing_writer.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <thread>

#include "dcpkt/error.hpp"

namespace dcpkt {

CoalescingWriter::CoalescingWriter(File& file, CoalescingOptions options)
    : file_(file), options_(options) {
  if (options_.enabled && options_.threshold_bytes == 0) {
    throw ValidationError("coalescing threshold must be positive");
  }
}

void CoalescingWriter::write(std::uint64_t file_offset, std::span<const std::byte> data) {
  if (data.empty()) return;
  if (file_offset < last_end_) {
    throw ValidationError("extent at " + std::to_string(file_offset) +
                          " arrives out of ascending order");
  }
  last_end_ = file_offset + data.size();
  stats_.region_sizes.push_back(data.size());
  stats_.payload_bytes += data.size();

  if (!options_.enabled) {
    issue(data, file_offset);
    return;
  }
  if (data.size() >= options_.threshold_bytes) {
    flush();
    while (!data.empty()) {
      const std::size_t n = std::min(data.size(), options_.threshold_bytes);
      issue(data.first(n), file_offset);
      data = data.subspan(n);
      file_offset += n;
    }
    return;
  }
  if (staged_.size() + data.size() > options_.threshold_bytes) flush();

  const std::size_t at = staged_.size();
  staged_.insert(staged_.end(), data.begin(), data.end());
  if (!extents_.empty() &&
      extents_.back().file_offset + extents_.back().length == file_offset) {
    extents_.back().length += data.size();
  } else {
    extents_.push_back({file_offset, at, data.size()});
  }
}

void CoalescingWriter::flush() {
  if (extents_.empty()) return;
  const std::uint64_t span_cap = 2 * static_cast<std::uint64_t>(options_.threshold_bytes);
  std::size_t first = 0;
  for (std::size_t i = 1; i <= extents_.size(); ++i) {
    bool split = i == extents_.size();
    if (!split) {
      const Extent& prev = extents_[i - 1];
      const Extent& next = extents_[i];
      const std::uint64_t gap = next.file_offset - (prev.file_offset + prev.length);
      const std::uint64_t span = next.file_offset + next.length - extents_[first].file_offset;
      split = gap > options_.max_gap_bytes || span > span_cap;
    }
    if (split) {
      flush_run(first, i - 1);
      first = i;
    }
  }
  staged_.clear();
  extents_.clear();
  ++stats_.flushes;
}

void CoalescingWriter::flush_run(std::size_t first, std::size_t last) {
  if (first == last) {
    const Extent& e = extents_[first];
    issue(std::span<const std::byte>(staged_.data() + e.staged_offset, e.length), e.file_offset);
    return;
  }
  const std::uint64_t start = extents_[first].file_offset;
  const std::uint64_t end = extents_[last].file_offset + extents_[last].length;
  span_buffer_.resize(static_cast<std::size_t>(end - start));
  file_.pread_exact(span_buffer_, start);
  ++stats_.read_calls;
  for (std::size_t i = first; i <= last; ++i) {
    const Extent& e = extents_[i];
    std::memcpy(span_buffer_.data() + (e.file_offset - start), staged_.data() + e.staged_offset,
                e.length);
  }
  issue(span_buffer_, start);
}

void CoalescingWriter::issue(std::span<const std::byte> data, std::uint64_t offset) {
  file_.pwrite_all(data, offset);
  ++stats_.write_calls;
  stats_.bytes_written += data.size();
  stats_.write_sizes.push_back(data.size());
  if (options_.write_latency.count() > 0) std::this_thread::sleep_for(options_.write_latency);
}

}  // namespace dcpkt
