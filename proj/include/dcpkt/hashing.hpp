#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace dcpkt {

/// Block hash algorithms. The numeric values are the on-disk tags.
enum class HashAlgorithm : std::uint8_t {
  adler32 = 0,
  fletcher32_m65536 = 1,
  fletcher32_m65535 = 2,
  crc32 = 3,
  md5 = 4,
};

inline constexpr std::array<HashAlgorithm, 5> kAllHashAlgorithms = {
    HashAlgorithm::adler32, HashAlgorithm::fletcher32_m65536, HashAlgorithm::fletcher32_m65535,
    HashAlgorithm::crc32, HashAlgorithm::md5};

inline constexpr std::size_t kMaxDigestWidth = 16;

constexpr std::size_t digest_width(HashAlgorithm alg) noexcept {
  return alg == HashAlgorithm::md5 ? 16 : 4;
}

std::string_view to_string(HashAlgorithm alg) noexcept;

/// Accepts the canonical names ("adler32", "fletcher32-65536", "fletcher32-65535",
/// "crc32", "md5"), case-insensitive.
std::optional<HashAlgorithm> parse_hash_algorithm(std::string_view name) noexcept;

/// Validates an on-disk tag.
std::optional<HashAlgorithm> hash_algorithm_from_tag(std::uint8_t tag) noexcept;

/// A digest tagged with the algorithm that produced it.
///
/// 32-bit checksums are stored big-endian so the hex form reads like the
/// conventional integer value (CRC32("123456789") -> "cbf43926").
class Digest {
 public:
  Digest() = default;
  Digest(HashAlgorithm alg, std::span<const std::uint8_t> bytes);

  static Digest from_u32(HashAlgorithm alg, std::uint32_t value);

  HashAlgorithm algorithm() const noexcept { return alg_; }
  std::size_t width() const noexcept { return digest_width(alg_); }
  std::span<const std::uint8_t> bytes() const noexcept { return {bytes_.data(), width()}; }

  /// Only meaningful for the 32-bit algorithms.
  std::uint32_t as_u32() const noexcept;

  std::string hex() const;

  /// Digests of different algorithms never compare equal.
  friend bool operator==(const Digest& a, const Digest& b) noexcept {
    return a.alg_ == b.alg_ && a.bytes_ == b.bytes_;
  }

 private:
  HashAlgorithm alg_ = HashAlgorithm::crc32;
  std::array<std::uint8_t, kMaxDigestWidth> bytes_{};
};

/// Fletcher-32 over little-endian 16-bit words with an explicit modulus
/// (65536 or 65535). An odd trailing byte is treated as a word with a zero
/// high byte. The digest is (sum2 << 16) | sum1.
std::uint32_t fletcher32(std::span<const std::uint8_t> data, std::uint32_t modulus) noexcept;

/// Incremental hasher; feeding data in pieces yields the same digest as
/// hashing the concatenation in one call.
class Hasher {
 public:
  explicit Hasher(HashAlgorithm alg);
  ~Hasher();
  Hasher(Hasher&&) noexcept;
  Hasher& operator=(Hasher&&) noexcept;
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  void update(std::span<const std::uint8_t> data);
  void update(std::span<const std::byte> data) {
    update({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
  }
  Digest finish();

 private:
  struct State;
  HashAlgorithm alg_;
  std::unique_ptr<State> state_;
};

Digest hash_block(HashAlgorithm alg, std::span<const std::uint8_t> data);

inline Digest hash_block(HashAlgorithm alg, std::span<const std::byte> data) {
  return hash_block(alg, {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

}  // namespace dcpkt
