#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

namespace dcpkt {

/// RAII POSIX file descriptor with positioned, short-I/O-safe reads and writes.
class File {
 public:
  enum class Mode { read, read_write, create_truncate };

  File() = default;
  File(const std::filesystem::path& path, Mode mode);
  ~File();
  File(File&& other) noexcept;
  File& operator=(File&& other) noexcept;
  File(const File&) = delete;
  File& operator=(const File&) = delete;

  bool is_open() const noexcept { return fd_ >= 0; }
  const std::filesystem::path& path() const noexcept { return path_; }

  void pwrite_all(std::span<const std::byte> data, std::uint64_t offset);
  /// Throws CorruptionError if the file ends before `out` is filled.
  void pread_exact(std::span<std::byte> out, std::uint64_t offset) const;
  std::uint64_t size() const;
  void truncate(std::uint64_t size);
  void sync();
  void close();

 private:
  int fd_ = -1;
  std::filesystem::path path_;
};

/// fsync on the directory so a completed rename survives a crash.
void sync_directory(const std::filesystem::path& dir);

/// rename(2); atomic replacement within one filesystem.
void atomic_rename(const std::filesystem::path& from, const std::filesystem::path& to);

/// Byte copy of `from` into a freshly truncated `to`.
void copy_file_contents(const std::filesystem::path& from, const std::filesystem::path& to);

}  // namespace dcpkt
