#include "dcpkt/hashing.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <utility>

#include "dcpkt/error.hpp"

namespace dcpkt {

namespace {

const EVP_MD* md5_method() {
  static const EVP_MD* md = EVP_md5();
  return md;
}

// Word count between modular reductions; keeps both sums far below 2^64.
constexpr std::size_t kFletcherReduceEvery = 4096;

struct FletcherSums {
  std::uint64_t sum1 = 0;
  std::uint64_t sum2 = 0;
};

void fletcher_words(FletcherSums& s, const std::uint8_t* p, std::size_t words, std::uint32_t m) {
  while (words > 0) {
    std::size_t n = std::min(words, kFletcherReduceEvery);
    words -= n;
    for (; n > 0; --n, p += 2) {
      s.sum1 += static_cast<std::uint64_t>(p[0]) | (static_cast<std::uint64_t>(p[1]) << 8);
      s.sum2 += s.sum1;
    }
    s.sum1 %= m;
    s.sum2 %= m;
  }
}

std::uint32_t fletcher_digest(const FletcherSums& s, std::uint32_t m) {
  return static_cast<std::uint32_t>(((s.sum2 % m) << 16) | (s.sum1 % m));
}

std::uint32_t fletcher_modulus(HashAlgorithm alg) {
  return alg == HashAlgorithm::fletcher32_m65535 ? 65535u : 65536u;
}

struct Md5Ctx {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  ~Md5Ctx() { EVP_MD_CTX_free(ctx); }
};

Digest md5_oneshot(std::span<const std::uint8_t> data) {
  thread_local Md5Ctx tls;
  std::array<std::uint8_t, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (tls.ctx == nullptr || EVP_DigestInit_ex(tls.ctx, md5_method(), nullptr) != 1 ||
      EVP_DigestUpdate(tls.ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(tls.ctx, out.data(), &len) != 1 || len != 16) {
    throw Error("MD5 computation failed");
  }
  return Digest(HashAlgorithm::md5, std::span<const std::uint8_t>(out.data(), 16));
}

}  // namespace

std::string_view to_string(HashAlgorithm alg) noexcept {
  switch (alg) {
    case HashAlgorithm::adler32: return "adler32";
    case HashAlgorithm::fletcher32_m65536: return "fletcher32-65536";
    case HashAlgorithm::fletcher32_m65535: return "fletcher32-65535";
    case HashAlgorithm::crc32: return "crc32";
    case HashAlgorithm::md5: return "md5";
  }
  return "unknown";
}

std::optional<HashAlgorithm> parse_hash_algorithm(std::string_view name) noexcept {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (HashAlgorithm alg : kAllHashAlgorithms) {
    if (lower == to_string(alg)) return alg;
  }
  if (lower == "fletcher32") return HashAlgorithm::fletcher32_m65536;
  return std::nullopt;
}

std::optional<HashAlgorithm> hash_algorithm_from_tag(std::uint8_t tag) noexcept {
  if (tag > static_cast<std::uint8_t>(HashAlgorithm::md5)) return std::nullopt;
  return static_cast<HashAlgorithm>(tag);
}

Digest::Digest(HashAlgorithm alg, std::span<const std::uint8_t> bytes) : alg_(alg) {
  if (bytes.size() != digest_width(alg)) {
    throw ValidationError("digest width " + std::to_string(bytes.size()) + " does not match " +
                          std::string(to_string(alg)));
  }
  std::copy(bytes.begin(), bytes.end(), bytes_.begin());
}

Digest Digest::from_u32(HashAlgorithm alg, std::uint32_t value) {
  if (digest_width(alg) != 4) throw ValidationError("from_u32 on a 128-bit algorithm");
  const std::array<std::uint8_t, 4> be = {
      static_cast<std::uint8_t>(value >> 24), static_cast<std::uint8_t>(value >> 16),
      static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
  return Digest(alg, be);
}

std::uint32_t Digest::as_u32() const noexcept {
  return (static_cast<std::uint32_t>(bytes_[0]) << 24) |
         (static_cast<std::uint32_t>(bytes_[1]) << 16) |
         (static_cast<std::uint32_t>(bytes_[2]) << 8) | static_cast<std::uint32_t>(bytes_[3]);
}

std::string Digest::hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(width() * 2);
  for (std::uint8_t b : bytes()) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

std::uint32_t fletcher32(std::span<const std::uint8_t> data, std::uint32_t modulus) noexcept {
  FletcherSums s;
  fletcher_words(s, data.data(), data.size() / 2, modulus);
  if (data.size() % 2 != 0) {
    const std::uint8_t last[2] = {data.back(), 0};
    fletcher_words(s, last, 1, modulus);
  }
  return fletcher_digest(s, modulus);
}

struct Hasher::State {
  std::uint32_t checksum = 0;  // crc32 / adler32
  FletcherSums fletcher;
  std::optional<std::uint8_t> pending;  // odd byte awaiting its word partner
  EVP_MD_CTX* md5 = nullptr;

  ~State() {
    if (md5 != nullptr) EVP_MD_CTX_free(md5);
  }
};

Hasher::Hasher(HashAlgorithm alg) : alg_(alg), state_(std::make_unique<State>()) {
  switch (alg) {
    case HashAlgorithm::crc32:
      state_->checksum = static_cast<std::uint32_t>(::crc32_z(0L, Z_NULL, 0));
      break;
    case HashAlgorithm::adler32:
      state_->checksum = static_cast<std::uint32_t>(::adler32_z(0L, Z_NULL, 0));
      break;
    case HashAlgorithm::md5:
      state_->md5 = EVP_MD_CTX_new();
      if (state_->md5 == nullptr || EVP_DigestInit_ex(state_->md5, md5_method(), nullptr) != 1) {
        throw Error("MD5 context initialisation failed");
      }
      break;
    default:
      break;
  }
}

Hasher::~Hasher() = default;
Hasher::Hasher(Hasher&&) noexcept = default;
Hasher& Hasher::operator=(Hasher&&) noexcept = default;

void Hasher::update(std::span<const std::uint8_t> data) {
  State& s = *state_;
  switch (alg_) {
    case HashAlgorithm::crc32:
      s.checksum = static_cast<std::uint32_t>(::crc32_z(s.checksum, data.data(), data.size()));
      return;
    case HashAlgorithm::adler32:
      s.checksum = static_cast<std::uint32_t>(::adler32_z(s.checksum, data.data(), data.size()));
      return;
    case HashAlgorithm::md5:
      if (EVP_DigestUpdate(s.md5, data.data(), data.size()) != 1) throw Error("MD5 update failed");
      return;
    case HashAlgorithm::fletcher32_m65536:
    case HashAlgorithm::fletcher32_m65535: {
      const std::uint32_t m = fletcher_modulus(alg_);
      if (data.empty()) return;
      if (s.pending) {
        const std::uint8_t word[2] = {*s.pending, data.front()};
        fletcher_words(s.fletcher, word, 1, m);
        s.pending.reset();
        data = data.subspan(1);
      }
      fletcher_words(s.fletcher, data.data(), data.size() / 2, m);
      if (data.size() % 2 != 0) s.pending = data.back();
      return;
    }
  }
}

Digest Hasher::finish() {
  State& s = *state_;
  switch (alg_) {
    case HashAlgorithm::crc32:
    case HashAlgorithm::adler32:
      return Digest::from_u32(alg_, s.checksum);
    case HashAlgorithm::md5: {
      std::array<std::uint8_t, EVP_MAX_MD_SIZE> out{};
      unsigned int len = 0;
      if (EVP_DigestFinal_ex(s.md5, out.data(), &len) != 1 || len != 16) {
        throw Error("MD5 finalisation failed");
      }
      return Digest(alg_, std::span<const std::uint8_t>(out.data(), 16));
    }
    case HashAlgorithm::fletcher32_m65536:
    case HashAlgorithm::fletcher32_m65535: {
      const std::uint32_t m = fletcher_modulus(alg_);
      if (s.pending) {
        const std::uint8_t word[2] = {*s.pending, 0};
        fletcher_words(s.fletcher, word, 1, m);
        s.pending.reset();
      }
      return Digest::from_u32(alg_, fletcher_digest(s.fletcher, m));
    }
  }
  throw ValidationError("unknown hash algorithm");
}

Digest hash_block(HashAlgorithm alg, std::span<const std::uint8_t> data) {
  switch (alg) {
    case HashAlgorithm::crc32:
      return Digest::from_u32(alg, static_cast<std::uint32_t>(
                                       ::crc32_z(::crc32_z(0L, Z_NULL, 0), data.data(), data.size())));
    case HashAlgorithm::adler32:
      return Digest::from_u32(alg, static_cast<std::uint32_t>(::adler32_z(
                                       ::adler32_z(0L, Z_NULL, 0), data.data(), data.size())));
    case HashAlgorithm::fletcher32_m65536:
    case HashAlgorithm::fletcher32_m65535:
      return Digest::from_u32(alg, fletcher32(data, fletcher_modulus(alg)));
    case HashAlgorithm::md5:
      return md5_oneshot(data);
  }
  throw ValidationError("unknown hash algorithm");
}

}  // namespace dcpkt
