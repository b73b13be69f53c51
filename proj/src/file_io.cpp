#include "dcpkt/file_io.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <utility>
#include <vector>

#include "dcpkt/error.hpp"

namespace dcpkt {

File::File(const std::filesystem::path& path, Mode mode) : path_(path) {
  int flags = O_CLOEXEC;
  switch (mode) {
    case Mode::read: flags |= O_RDONLY; break;
    case Mode::read_write: flags |= O_RDWR; break;
    case Mode::create_truncate: flags |= O_RDWR | O_CREAT | O_TRUNC; break;
  }
  fd_ = ::open(path.c_str(), flags, 0644);
  if (fd_ < 0) throw IoError("open " + path.string(), errno);
}

File::~File() {
  if (fd_ >= 0) ::close(fd_);
}

File::File(File&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), path_(std::move(other.path_)) {}

File& File::operator=(File&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    path_ = std::move(other.path_);
  }
  return *this;
}

void File::pwrite_all(std::span<const std::byte> data, std::uint64_t offset) {
  while (!data.empty()) {
    const ssize_t n = ::pwrite(fd_, data.data(), data.size(), static_cast<off_t>(offset));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write " + path_.string(), errno);
    }
    data = data.subspan(static_cast<std::size_t>(n));
    offset += static_cast<std::uint64_t>(n);
  }
}

void File::pread_exact(std::span<std::byte> out, std::uint64_t offset) const {
  while (!out.empty()) {
    const ssize_t n = ::pread(fd_, out.data(), out.size(), static_cast<off_t>(offset));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("read " + path_.string(), errno);
    }
    if (n == 0) throw CorruptionError("unexpected end of file in " + path_.string());
    out = out.subspan(static_cast<std::size_t>(n));
    offset += static_cast<std::uint64_t>(n);
  }
}

std::uint64_t File::size() const {
  struct stat st {};
  if (::fstat(fd_, &st) != 0) throw IoError("stat " + path_.string(), errno);
  return static_cast<std::uint64_t>(st.st_size);
}

void File::truncate(std::uint64_t size) {
  if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) {
    throw IoError("truncate " + path_.string(), errno);
  }
}

void File::sync() {
  if (::fsync(fd_) != 0) throw IoError("fsync " + path_.string(), errno);
}

void File::close() {
  if (fd_ < 0) return;
  const int fd = std::exchange(fd_, -1);
  if (::close(fd) != 0) throw IoError("close " + path_.string(), errno);
}

void sync_directory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) throw IoError("open directory " + dir.string(), errno);
  const int rc = ::fsync(fd);
  const int err = errno;
  ::close(fd);
  if (rc != 0) throw IoError("fsync directory " + dir.string(), err);
}

void atomic_rename(const std::filesystem::path& from, const std::filesystem::path& to) {
  if (std::rename(from.c_str(), to.c_str()) != 0) {
    throw IoError("rename " + from.string() + " -> " + to.string(), errno);
  }
}

void copy_file_contents(const std::filesystem::path& from, const std::filesystem::path& to) {
  File src(from, File::Mode::read);
  File dst(to, File::Mode::create_truncate);
  constexpr std::size_t kChunk = 8 << 20;
  std::vector<std::byte> buffer(kChunk);
  const std::uint64_t total = src.size();
  for (std::uint64_t off = 0; off < total;) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, total - off));
    std::span<std::byte> chunk(buffer.data(), n);
    src.pread_exact(chunk, off);
    dst.pwrite_all(chunk, off);
    off += n;
  }
  dst.close();
}

}  // namespace dcpkt
