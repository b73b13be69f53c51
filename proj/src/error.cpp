#include "dcpkt/error.hpp"

#include <cstring>

namespace dcpkt {

IoError::IoError(const std::string& what, int err)
    : Error(err ? what + ": " + std::strerror(err) : what), errno_(err) {}

PayloadChecksumError::PayloadChecksumError(std::uint64_t dataset_id, std::uint32_t container_index)
    : CorruptionError("payload checksum mismatch in dataset " + std::to_string(dataset_id) +
                      " container " + std::to_string(container_index)),
      dataset_id_(dataset_id),
      container_index_(container_index) {}

}  // namespace dcpkt
