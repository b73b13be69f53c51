#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dcpkt {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument that violates an operation's contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operating-system level I/O call failed.
class IoError : public Error {
 public:
  IoError(const std::string& what, int err);
  int error_code() const noexcept { return errno_; }

 private:
  int errno_;
};

/// A checkpoint file is malformed or fails checksum validation.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Payload checksum mismatch, attributed to one container.
class PayloadChecksumError : public CorruptionError {
 public:
  PayloadChecksumError(std::uint64_t dataset_id, std::uint32_t container_index);
  std::uint64_t dataset_id() const noexcept { return dataset_id_; }
  std::uint32_t container_index() const noexcept { return container_index_; }

 private:
  std::uint64_t dataset_id_;
  std::uint32_t container_index_;
};

/// The planned layout cannot accommodate a request.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Engine state machine rejected an operation.
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcpkt
