#include <doctest.h>

#include <random>

#include "dcpkt/coalescing_writer.hpp"
#include "dcpkt/error.hpp"
#include "oracles.hpp"

using namespace dcpkt;

TEST_SUITE("coalescing") {

TEST_CASE("1000 regions of 16 KB need far fewer than 1000 writes") {
  oracle::TempDir dir("coal");
  constexpr std::size_t kRegion = 16 << 10;
  std::vector<std::byte> region(kRegion, std::byte{7});
  File f(dir / "f", File::Mode::create_truncate);
  f.truncate(2000 * kRegion);
  CoalescingWriter w(f, {});
  for (std::size_t i = 0; i < 1000; ++i) w.write(2 * i * kRegion, region);
  w.flush();
  CHECK(w.stats().write_calls <= 2);
  CHECK(w.stats().payload_bytes == 1000 * kRegion);
  CHECK(w.stats().region_sizes.size() == 1000);
}

TEST_CASE("a 200 MB region passes through in threshold-sized writes") {
  oracle::TempDir dir("coalbig");
  const std::size_t n = 200'000'000;
  std::vector<std::byte> big(n, std::byte{1});
  File f(dir / "f", File::Mode::create_truncate);
  CoalescingWriter w(f, {});
  w.write(0, big);
  w.flush();
  const std::size_t t = kDefaultCoalescingThreshold;
  CHECK(w.stats().write_calls == (n + t - 1) / t);
  CHECK(f.size() == n);
}

TEST_CASE("empty stream writes nothing") {
  oracle::TempDir dir("coalnil");
  File f(dir / "f", File::Mode::create_truncate);
  CoalescingWriter w(f, {});
  w.flush();
  CHECK(w.stats().write_calls == 0);
  CHECK(f.size() == 0);
}

TEST_CASE("file bytes are the same with coalescing on or off") {
  oracle::TempDir dir("coaleq");
  std::mt19937_64 rng(11);
  const std::size_t size = 8 << 20;
  const auto base = oracle::random_bytes(size, rng);
  auto payload = oracle::random_bytes(size, rng);

  std::vector<std::pair<std::uint64_t, std::uint64_t>> extents;
  std::uint64_t pos = 0;
  while (true) {
    pos += rng() % 40000;
    const std::uint64_t len = 1 + rng() % 70000;
    if (pos + len > size) break;
    extents.push_back({pos, len});
    pos += len;
  }
  REQUIRE(extents.size() > 50);

  std::vector<std::vector<std::byte>> results;
  for (bool on : {true, false}) {
    const auto path = dir / (on ? "on" : "off");
    {
      File f(path, File::Mode::create_truncate);
      f.pwrite_all(base, 0);
      CoalescingOptions opt;
      opt.enabled = on;
      opt.threshold_bytes = 1 << 20;
      opt.max_gap_bytes = 32 << 10;
      CoalescingWriter w(f, opt);
      for (const auto& [off, len] : extents) {
        w.write(off, std::span<const std::byte>(payload).subspan(off, len));
      }
      w.flush();
      if (on) {
        CHECK(w.stats().write_calls < extents.size());
      } else {
        CHECK(w.stats().write_calls == extents.size());
      }
    }
    results.push_back(oracle::read_file(path));
  }
  CHECK(results[0] == results[1]);
  auto expected = base;
  for (const auto& [off, len] : extents) {
    std::copy_n(payload.begin() + off, len, expected.begin() + off);
  }
  CHECK(results[0] == expected);
}

TEST_CASE("extents must be ascending") {
  oracle::TempDir dir("coalord");
  File f(dir / "f", File::Mode::create_truncate);
  CoalescingWriter w(f, {});
  std::vector<std::byte> x(10);
  w.write(100, x);
  CHECK_THROWS_AS(w.write(50, x), ValidationError);
}

}  // TEST_SUITE
