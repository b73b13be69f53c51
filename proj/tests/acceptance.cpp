// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero if any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dcpkt/bench_harness.hpp"
#include "dcpkt/block_tracker.hpp"
#include "dcpkt/checkpoint_engine.hpp"
#include "dcpkt/collision.hpp"
#include "dcpkt/container_format.hpp"
#include "dcpkt/cost_model.hpp"
#include "dcpkt/hashing.hpp"
#include "oracles.hpp"

using namespace dcpkt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

using Bytes = std::vector<std::byte>;
using Clock = std::chrono::steady_clock;

bool within_order_of_magnitude(double x, double target) {
  return x >= target / 10 && x <= target * 10;
}

std::uint64_t log_uniform(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  std::uniform_real_distribution<double> u(std::log(static_cast<double>(lo)),
                                           std::log(static_cast<double>(hi)));
  return static_cast<std::uint64_t>(std::exp(u(rng)));
}

// ---- 1: collision rates ----

void collision_rates(Outcome& o, const fs::path&) {
  CollisionConfig cfg;
  cfg.algorithms = {HashAlgorithm::adler32, HashAlgorithm::fletcher32_m65536,
                    HashAlgorithm::crc32, HashAlgorithm::md5};
  cfg.block_sizes = {128, 256, 512, 1024};
  cfg.iterations = 1'000'000;
  cfg.rng_seed = 7;
  const auto report = avalanche_collision_test(cfg);

  const auto* adler = report.find(HashAlgorithm::adler32, 128, kDefaultPatterns[0]);
  o.require(adler != nullptr, "adler32 b=128 p0 row");
  if (adler) {
    o.detail << " adler32[b=128,p0]=" << adler->rate();
    o.require(within_order_of_magnitude(adler->rate(), 6.84e-3), "adler32 b=128 p0 rate");
  }
  double fl_min = 1, fl_max = 0;
  std::uint64_t exact = 0, fl_rows = 0, fl_out = 0;
  for (const auto& r : report.rows) {
    if (r.algorithm == HashAlgorithm::fletcher32_m65536) {
      fl_min = std::min(fl_min, r.rate());
      fl_max = std::max(fl_max, r.rate());
      ++fl_rows;
      if (!within_order_of_magnitude(r.rate(), 1.5e-5)) ++fl_out;
    }
    if (r.algorithm == HashAlgorithm::crc32 || r.algorithm == HashAlgorithm::md5) {
      exact += r.collisions;
    }
  }
  o.detail << " fletcher32-65536 rate range [" << fl_min << "," << fl_max << "]"
           << " (" << fl_out << "/" << fl_rows << " rows off target) crc32+md5 collisions=" << exact;
  o.require(fl_out == 0, "fletcher32-65536 rates");
  o.require(exact == 0, "crc32/md5 collisions");
}

// ---- 2: deterministic Fletcher collision ----

void fletcher_swap(Outcome& o, const fs::path&) {
  std::mt19937_64 rng(2);
  int collided = 0, trials = 0;
  for (std::size_t b : {128u, 1024u, 16384u}) {
    for (int t = 0; t < 50; ++t, ++trials) {
      Bytes a = oracle::random_bytes(b, rng);
      const std::size_t word = (rng() % (b / 2)) * 2;
      Bytes z = a;
      a[word] = a[word + 1] = std::byte{0x00};
      z[word] = z[word + 1] = std::byte{0xFF};
      if (hash_block(HashAlgorithm::fletcher32_m65535, a) ==
          hash_block(HashAlgorithm::fletcher32_m65535, z)) {
        ++collided;
      }
    }
  }
  o.detail << " collisions " << collided << "/" << trials;
  o.require(collided == trials, "every aligned swap collides");
}

// ---- 3: model identities ----

void model_identities(Outcome& o, const fs::path&) {
  double worst = 0;
  for (int i = 1; i <= 200; ++i) {
    const CostModelParams p{0, 1e-3, 1e-3 * i / 201.0};
    const double e = eta(p);
    worst = std::max(worst, std::abs(tau(p, e)) / (p.t_w + p.t_h));
    o.require(std::abs(speedup(p, 1.0) - 2 * p.rho()) <= 1e-12 * p.rho(), "speedup(1) == 2 rho");
    o.require(corrected_tau(p, CorrectionTerms{}, 0.4, 0.3) == tau(p, 0.4), "zero corrections");
  }
  o.require(worst <= 1e-12, "tau(eta) == 0");
  const CostModelParams cal{16384, 1.35e-3, 3.92e-5};
  const double e = eta(cal), s = speedup(cal, 0.03);
  o.detail << " max|tau(eta)|/(t_w+t_h)=" << worst << " eta=" << e << " S(0.03)=" << s;
  o.require(std::abs(e - 0.9436) <= 1e-3, "eta");
  o.require(std::abs(s - (-0.94)) <= 1e-3, "speedup(0.03)");
}

// ---- 4: dirty detection exactness ----

void detection_exactness(Outcome& o, const fs::path&) {
  std::mt19937_64 rng(4);
  constexpr std::uint64_t kMiB = 1 << 20;
  std::uint64_t rounds_total = 0, mismatches = 0, dirty_seen = 0;
  for (HashAlgorithm alg : {HashAlgorithm::md5, HashAlgorithm::crc32}) {
    std::uint64_t rounds = 0;
    for (int session = 0; session < 20; ++session) {
      const std::uint64_t b = rng() % 2 ? 4096 : 16384;
      Bytes data = oracle::random_bytes(log_uniform(rng, kMiB, 64 * kMiB), rng);
      DatasetDescriptor ds = make_dataset(1, b, alg);
      register_blocks(ds, data.size());
      commit_hashes(ds, data);
      Bytes snapshot = data;

      for (int round = 0; round < 50; ++round, ++rounds) {
        const int edits = static_cast<int>(rng() % 40);
        for (int e = 0; e < edits; ++e) {
          const std::size_t at = rng() % data.size();
          const std::size_t len = std::min<std::size_t>(1 + rng() % (3 * b), data.size() - at);
          switch (rng() % 3) {
            case 0:  // single byte
              data[at] = static_cast<std::byte>(static_cast<std::uint8_t>(data[at]) + 1);
              break;
            case 1:  // run across block edges
              for (std::size_t k = 0; k < len; ++k) data[at + k] ^= std::byte{0xA5};
              break;
            default:  // write back identical bytes
              std::memcpy(data.data() + at, snapshot.data() + at,
                          std::min(len, snapshot.size() > at ? snapshot.size() - at : 0));
          }
        }
        if (rng() % 10 == 0) {
          const std::uint64_t size = log_uniform(rng, kMiB, 64 * kMiB);
          data.resize(size, std::byte{0x3C});
          register_blocks(ds, data.size());
        }

        const auto expected = oracle::dirty_blocks(snapshot, data, b);
        std::vector<bool> got(expected.size(), false);
        std::size_t cursor = 0;
        while (auto scan = next_dirty_region(ds, data, cursor)) {
          for (std::uint64_t i = scan->region.offset_bytes / b;
               i * b < scan->region.offset_bytes + scan->region.length_bytes; ++i) {
            got[i] = true;
          }
          cursor = scan->next_cursor;
        }
        if (got != expected) ++mismatches;
        dirty_seen += static_cast<std::uint64_t>(std::count(expected.begin(), expected.end(), true));
        commit_hashes(ds, data);
        snapshot = data;
      }
    }
    rounds_total += rounds;
    o.require(rounds >= 1000, std::string(to_string(alg)) + " rounds");
  }
  o.detail << " rounds=" << rounds_total << " dirty_blocks=" << dirty_seen
           << " mismatching_rounds=" << mismatches;
  o.require(mismatches == 0, "oracle mismatch");
}

// ---- 5: crash safety ----

void mutate(std::map<DatasetId, Bytes>& data, std::mt19937_64& rng, std::uint64_t b) {
  for (auto& [id, v] : data) {
    if (rng() % 4 == 0) v.resize(1 + rng() % (64 * b), std::byte{0x77});
    const int edits = 1 + static_cast<int>(rng() % 8);
    for (int e = 0; e < edits && !v.empty(); ++e) v[rng() % v.size()] ^= std::byte{0x10};
  }
}

void crash_safety(Outcome& o, const fs::path& work) {
  std::mt19937_64 rng(5);
  constexpr std::uint64_t b = 1024;
  std::uint64_t trials = 0, old_seen = 0, new_seen = 0, mixed = 0, unfired = 0, wrong_side = 0,
                recover_failures = 0, retry_failures = 0;
  // Before the rename only the old state may be visible, from it on only the new one.
  auto classify = [&](const std::map<DatasetId, Bytes>& got, const std::map<DatasetId, Bytes>& old_state,
                      const std::map<DatasetId, Bytes>& new_state, FaultPoint point) {
    const bool committed =
        point == FaultPoint::after_rename || point == FaultPoint::before_commit_hashes;
    if (got == new_state) {
      ++new_seen;
      if (!committed && got != old_state) ++wrong_side;
    } else if (got == old_state) {
      ++old_seen;
      if (committed) ++wrong_side;
    } else {
      ++mixed;
    }
  };

  for (bool crash : {true, false}) {
    for (FaultPoint point : kCommitFaultPoints) {
      for (int trial = 0; trial < 20; ++trial, ++trials) {
        const fs::path dir = work / "crash" / (std::to_string(trials));
        fs::remove_all(dir);
        EngineConfig cfg;
        cfg.checkpoint_directory = dir;
        cfg.block_size = b;
        cfg.algorithm = trial % 2 ? HashAlgorithm::crc32 : HashAlgorithm::md5;
        cfg.coalescing_threshold_bytes = 4 * b;
        cfg.coalescing_max_gap_bytes = rng() % 2 ? b : 0;
        cfg.async_duplicate = rng() % 2;

        std::map<DatasetId, Bytes> live;
        const int nsets = 1 + static_cast<int>(rng() % 3);
        for (int d = 0; d < nsets; ++d) live[static_cast<DatasetId>(d * 3 + 1)] = oracle::random_bytes(1 + rng() % (48 * b), rng);

        std::map<DatasetId, Bytes> old_state;
        bool fired = false;
        {
          CheckpointEngine e(cfg);
          for (auto& [id, v] : live) e.protect(id, DataRegion::of(v));
          const int warmup = 1 + static_cast<int>(rng() % 3);
          for (int w = 0; w < warmup; ++w) {
            mutate(live, rng, b);
            for (auto& [id, v] : live) e.protect(id, DataRegion::of(v));
            e.checkpoint();
          }
          old_state = live;
          mutate(live, rng, b);
          for (auto& [id, v] : live) e.protect(id, DataRegion::of(v));

          e.set_fault_hook([&](FaultPoint p, std::uint64_t) {
            if (p != point || fired) return;
            fired = true;
            if (crash) throw SimulatedCrash();
            throw IoError("injected fault", EIO);
          });
          try {
            e.checkpoint();
          } catch (const SimulatedCrash&) {
          } catch (const IoError&) {
          }
          if (!crash && fired) {
            // On-disk state right after the failed attempt.
            try {
              classify(load_checkpoint(*find_latest_checkpoint(dir)), old_state, live, point);
            } catch (const std::exception&) {
              ++recover_failures;
            }
            // The surviving engine must be able to finish the job.
            e.set_fault_hook({});
            try {
              e.checkpoint();
              if (load_checkpoint(*find_latest_checkpoint(dir)) != live) ++retry_failures;
            } catch (const std::exception&) {
              ++retry_failures;
            }
          }
        }
        if (!fired) ++unfired;
        if (crash && fired) {
          std::map<DatasetId, Bytes> restored;
          for (const auto& [id, v] : live) restored[id];
          try {
            CheckpointEngine e(cfg);
            for (auto& [id, v] : restored) e.protect(id, DataRegion::of(v));
            e.recover();
            classify(restored, old_state, live, point);
          } catch (const std::exception&) {
            ++recover_failures;
          }
        }
        fs::remove_all(dir);
      }
    }
  }
  o.detail << " trials=" << trials << " old=" << old_seen << " new=" << new_seen
           << " mixed=" << mixed << " recover_failures=" << recover_failures
           << " unexpected_side=" << wrong_side << " retry_failures=" << retry_failures
           << " unreached_faults=" << unfired;
  o.require(mixed == 0, "mixed state");
  o.require(recover_failures == 0, "recover failed");
  o.require(unfired == 0, "fault point not reached");
  o.require(wrong_side == 0, "commit point ordering");
  o.require(retry_failures == 0, "retry after I/O error");
  fs::remove_all(work / "crash");
}

// ---- 6: dynamic sizes ----

void dynamic_sizes(Outcome& o, const fs::path& work) {
  const fs::path dir = work / "dynamic";
  fs::remove_all(dir);
  EngineConfig cfg;
  cfg.checkpoint_directory = dir;
  cfg.block_size = 4096;
  cfg.coalescing_threshold_bytes = 1 << 20;
  const std::vector<std::uint64_t> sizes_a = {100000, 150000, 80000, 80000, 200000, 50000, 120000,
                                              250000, 10000, 0,     260000, 30000, 300000, 5000};
  const std::vector<std::uint64_t> sizes_b = {4096, 4096, 40000, 8192, 0, 70000, 70001,
                                              1,    90000, 90000, 2000, 120000, 60000, 130000};
  std::mt19937_64 rng(6);
  Bytes a, b;
  std::map<std::pair<DatasetId, std::uint32_t>, std::pair<std::uint64_t, std::uint64_t>> seen;
  std::map<DatasetId, std::uint64_t> max_size;
  std::uint64_t exact = 0, immutable_violations = 0, capacity_violations = 0;

  {
    CheckpointEngine e(cfg);
    for (std::size_t k = 0; k < sizes_a.size(); ++k) {
      const std::size_t old_a = a.size(), old_b = b.size();
      a.resize(sizes_a[k]);
      b.resize(sizes_b[k]);
      if (a.size() > old_a) {
        auto fresh = oracle::random_bytes(a.size() - old_a, rng);
        std::copy(fresh.begin(), fresh.end(), a.begin() + static_cast<std::ptrdiff_t>(old_a));
      }
      if (b.size() > old_b) {
        auto fresh = oracle::random_bytes(b.size() - old_b, rng);
        std::copy(fresh.begin(), fresh.end(), b.begin() + static_cast<std::ptrdiff_t>(old_b));
      }
      for (int m = 0; m < 5 && !a.empty(); ++m) a[rng() % a.size()] ^= std::byte{1};
      e.protect(1, DataRegion::of(a));
      e.protect(2, DataRegion::of(b));
      e.checkpoint();
      max_size[1] = std::max(max_size[1], a.size());
      max_size[2] = std::max(max_size[2], b.size());

      const fs::path file = *find_latest_checkpoint(dir);
      File f(file, File::Mode::read);
      const FileLayout l = read_layout(f);
      if (read_dataset(f, l, 1) == a && read_dataset(f, l, 2) == b) ++exact;
      for (const auto& entry : l.entries) {
        const auto key = std::make_pair(entry.container.dataset_id, entry.container.container_index);
        const auto value = std::make_pair(entry.container.file_offset, entry.container.container_size);
        auto [it, inserted] = seen.emplace(key, value);
        if (!inserted && it->second != value) ++immutable_violations;
      }
      for (DatasetId id : {DatasetId{1}, DatasetId{2}}) {
        if (l.capacity(id) != max_size[id]) ++capacity_violations;
      }
    }
  }
  Bytes ra, rb;
  CheckpointEngine e(cfg);
  e.protect(1, DataRegion::of(ra));
  e.protect(2, DataRegion::of(rb));
  e.recover();
  const bool recovered = ra == a && rb == b;
  o.detail << " checkpoints=" << sizes_a.size() << " exact=" << exact
           << " containers=" << seen.size() << " offset_changes=" << immutable_violations
           << " capacity_mismatches=" << capacity_violations << " recover_exact=" << recovered;
  o.require(sizes_a.size() >= 10, "checkpoint count");
  o.require(exact == sizes_a.size(), "committed bytes");
  o.require(immutable_violations == 0, "container immutability");
  o.require(capacity_violations == 0, "capacity equals historical max");
  o.require(recovered, "recovery");
  fs::remove_all(dir);
}

// ---- 7: I/O economy ----

void io_economy(Outcome& o, const fs::path& work) {
  constexpr std::uint64_t b = 16384;
  constexpr std::uint64_t bytes = 8ull << 20;
  const std::uint64_t n = bytes / b;
  for (double f : {0.1, 0.5, 0.62}) {
    PatternRunConfig cfg;
    cfg.pattern.kind = PatternKind::uniform;
    cfg.pattern.fraction = f;
    cfg.pattern.ranks = 4;
    cfg.pattern.steps = 3;
    cfg.bytes_per_rank = bytes;
    cfg.outdir = work / "economy";
    cfg.engine.checkpoint_directory = work / "economy" / "ckpt";
    cfg.engine.block_size = b;
    const auto r = run_pattern(cfg);
    const auto expected_blocks = static_cast<std::uint64_t>(std::llround(f * static_cast<double>(n)));
    double worst_rate_err = 0;
    std::uint64_t worst_byte_err = 0;
    for (std::size_t rk = 0; rk < r.per_rank.size(); ++rk) {
      for (std::size_t k = 1; k < r.per_rank[rk].size(); ++k) {
        const auto& m = r.per_rank[rk][k];
        const std::uint64_t want = expected_blocks * b;
        const std::uint64_t diff = m.bytes_written_payload > want ? m.bytes_written_payload - want
                                                                  : want - m.bytes_written_payload;
        worst_byte_err = std::max(worst_byte_err, diff);
        const double rate = static_cast<double>(m.bytes_written_payload) / static_cast<double>(bytes);
        worst_rate_err = std::max(worst_rate_err, std::abs(rate - f));
        o.require(m.kind == CheckpointKind::differential, "differential");
      }
    }
    o.detail << " f=" << f << ":max|rate-f|=" << worst_rate_err << ",max_byte_err=" << worst_byte_err;
    o.require(worst_byte_err <= b, "payload within one block");
    o.require(worst_rate_err <= 1.0 / static_cast<double>(n), "rate within block rounding");
    o.require(r.verify_failures == 0, "committed state");
  }
  fs::remove_all(work / "economy");
}

// ---- 8: coalescing ----

void coalescing_effect(Outcome& o, const fs::path& work) {
  constexpr std::uint64_t b = 16384;
  constexpr std::uint64_t regions = 10'000;
  Bytes data(static_cast<std::size_t>(2 * regions * b));
  std::mt19937_64 rng(8);
  for (std::size_t i = 0; i < data.size(); i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(data.data() + i, &v, 8);
  }
  std::uint64_t calls[2] = {0, 0};
  double seconds[2] = {0, 0};
  fs::path files[2];
  for (int mode = 0; mode < 2; ++mode) {
    EngineConfig cfg;
    cfg.checkpoint_directory = work / (mode == 0 ? "coalesce_on" : "coalesce_off");
    fs::remove_all(cfg.checkpoint_directory);
    cfg.block_size = b;
    cfg.coalescing_enabled = mode == 0;
    cfg.coalescing_threshold_bytes = 16u << 20;
    cfg.async_duplicate = false;
    Bytes copy = data;
    CheckpointEngine e(cfg);
    e.protect(1, DataRegion::of(copy));
    e.checkpoint();
    for (std::uint64_t r = 0; r < regions; ++r) copy[2 * r * b + r % b] ^= std::byte{0x01};
    const auto m = e.checkpoint();
    o.require(m.kind == CheckpointKind::differential, "differential");
    o.require(m.region_count == regions, "region count");
    calls[mode] = m.write_stats.write_calls;
    seconds[mode] = m.wall_time_write;
    files[mode] = *find_latest_checkpoint(cfg.checkpoint_directory);
  }
  const double ratio = calls[0] == 0 ? 0 : static_cast<double>(calls[1]) / static_cast<double>(calls[0]);
  const bool identical = oracle::read_file(files[0]) == oracle::read_file(files[1]);
  o.detail << " write_calls on=" << calls[0] << " off=" << calls[1] << " ratio=" << ratio
           << " write_s on=" << seconds[0] << " off=" << seconds[1]
           << " identical_files=" << identical;
  o.require(ratio >= 50, "write-call reduction");
  o.require(identical, "file bytes");
  fs::remove_all(work / "coalesce_on");
  fs::remove_all(work / "coalesce_off");
}

// ---- 9: Heat2D ----

void heat2d_end_to_end(Outcome& o, const fs::path& work) {
  const auto t0 = Clock::now();
  Heat2DConfig cfg;
  cfg.nx = 256;
  cfg.ny = 256;
  cfg.ranks = 4;
  cfg.steps = 500;
  cfg.interval = 50;
  cfg.outdir = work / "heat2d" / "reference";
  cfg.engine.checkpoint_directory = work / "heat2d" / "reference_ckpt";
  const auto ref = run_heat2d(cfg);
  cfg.kill_after_step = 275;
  cfg.outdir = work / "heat2d" / "killed";
  cfg.engine.checkpoint_directory = work / "heat2d" / "killed_ckpt";
  const auto killed = run_heat2d(cfg);
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();

  const bool exact = ref.final_grid.size() == killed.final_grid.size() &&
                     std::memcmp(ref.final_grid.data(), killed.final_grid.data(),
                                 ref.final_grid.size() * sizeof(double)) == 0;

  // Independent global-grid simulation; expected n_d by byte diff of the rank band.
  const std::size_t nx = 256, ny = 256, rows = 64;
  const std::uint64_t b = cfg.engine.block_size;
  std::vector<double> g(nx * ny, 0.0), next;
  g[(ny / 2) * nx + nx / 2] = 1000.0;
  std::map<std::uint64_t, std::vector<double>> at_step{{0, g}};
  for (std::uint64_t s = 1; s <= cfg.steps; ++s) {
    next = g;
    for (std::size_t i = 1; i + 1 < ny; ++i) {
      for (std::size_t j = 1; j + 1 < nx; ++j) {
        next[i * nx + j] = 0.25 * ((g[(i - 1) * nx + j] + g[(i + 1) * nx + j]) +
                                   (g[i * nx + j - 1] + g[i * nx + j + 1]));
      }
    }
    g.swap(next);
    if (s % cfg.interval == 0) at_step[s] = g;
  }
  const bool oracle_grid = std::memcmp(g.data(), ref.final_grid.data(), g.size() * sizeof(double)) == 0;
  std::uint64_t nd_mismatch = 0, monotone_breaks = 0;
  std::map<int, double> last;
  std::ostringstream early;
  for (const auto& c : ref.nd_matrix) {
    if (c.checkpoint == 0) continue;
    auto band = [&](const std::vector<double>& v) {
      return std::as_bytes(std::span(v)).subspan(c.rank * rows * nx * sizeof(double),
                                                 rows * nx * sizeof(double));
    };
    const auto dirty = oracle::dirty_blocks(band(at_step.at(c.step - cfg.interval)),
                                            band(at_step.at(c.step)), b);
    const double want = static_cast<double>(std::count(dirty.begin(), dirty.end(), true)) /
                        static_cast<double>(dirty.size());
    if (std::abs(want - c.n_d) > 1e-12) ++nd_mismatch;
    if (c.n_d + 1e-12 < last[c.rank]) ++monotone_breaks;
    last[c.rank] = c.n_d;
    if (c.checkpoint == 1) early << (c.rank ? "," : "") << c.n_d;
  }
  std::uint64_t early_zero = 0, saturated = 0;
  for (const auto& c : ref.nd_matrix) {
    if (c.checkpoint == 1 && c.n_d == 0) ++early_zero;
    if (c.checkpoint + 1 == cfg.steps / cfg.interval + 1 && c.n_d == 1.0) ++saturated;
  }
  o.detail << " bit_exact=" << exact << " recovered_step=" << killed.recovered_step.value_or(0)
           << " oracle_grid=" << oracle_grid << " nd_mismatches=" << nd_mismatch
           << " first_nd=[" << early.str() << "] early_zero_ranks=" << early_zero
           << " saturated_ranks=" << saturated << " monotone_breaks=" << monotone_breaks
           << " elapsed_s=" << elapsed;
  o.require(exact, "kill-and-recover bit exact");
  o.require(killed.recovered_step == 250, "recovered at last checkpoint");
  o.require(ref.verify_failures == 0 && killed.verify_failures == 0, "committed state");
  o.require(oracle_grid, "grid matches oracle simulation");
  o.require(nd_mismatch == 0, "n_d matches byte diff");
  o.require(monotone_breaks == 0, "n_d monotone per rank");
  o.require(early_zero > 0, "compact support early");
  o.require(saturated == 4, "saturation");
  o.require(elapsed < 120, "runtime");
  fs::remove_all(work / "heat2d");
}

// ---- 10: format round trip ----

FileLayout random_layout(std::mt19937_64& rng, std::map<DatasetId, Bytes>& data) {
  const HashAlgorithm alg = kAllHashAlgorithms[rng() % std::size(kAllHashAlgorithms)];
  const std::uint64_t b = 1u << (6 + rng() % 8);
  const int nsets = static_cast<int>(rng() % 6);
  std::vector<DatasetExtent> ext;
  for (int i = 0; i < nsets; ++i) {
    DatasetId id = rng() % 1000;
    while (data.count(id)) ++id;
    data[id];
    ext.push_back({id, 0});
  }
  std::optional<FileLayout> layout;
  const int generations = 1 + static_cast<int>(rng() % 4);
  for (int gen = 0; gen < generations; ++gen) {
    for (auto& e : ext) e.size = rng() % 3 == 0 ? 0 : rng() % 20000;
    layout = plan_layout(layout, ext, {b, alg, static_cast<std::uint64_t>(gen + 1)});
  }
  for (const auto& e : ext) data[e.id] = oracle::random_bytes(e.size, rng);
  return *layout;
}

void format_round_trip(Outcome& o, const fs::path& work) {
  const fs::path dir = work / "format";
  fs::create_directories(dir);
  std::mt19937_64 rng(10);
  std::uint64_t identity_failures = 0, data_failures = 0;
  auto write = [&](const FileLayout& planned, std::map<DatasetId, Bytes>& data, const fs::path& p) {
    File f(p, File::Mode::create_truncate);
    return write_layout(f, planned, [&](DatasetId id, std::uint64_t off, std::span<std::byte> out) {
      std::memcpy(out.data(), data.at(id).data() + off, out.size());
    });
  };
  for (int t = 0; t < 500; ++t) {
    std::map<DatasetId, Bytes> data;
    const FileLayout planned = random_layout(rng, data);
    const fs::path p = dir / "rt";
    const FileLayout written = write(planned, data, p);
    File f(p, File::Mode::read);
    try {
      if (read_layout(f) != written) ++identity_failures;
      for (const auto& [id, bytes] : data) {
        if (read_dataset(f, written, id) != bytes) ++data_failures;
      }
    } catch (const Error&) {
      ++identity_failures;
    }
  }

  std::uint64_t detected = 0, attributed = 0, trials = 0;
  while (trials < 100) {
    std::map<DatasetId, Bytes> data;
    const FileLayout planned = random_layout(rng, data);
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < planned.entries.size(); ++i) {
      if (planned.entries[i].chunk.chunk_size > 0) live.push_back(i);
    }
    if (live.empty()) continue;
    ++trials;
    const fs::path p = dir / "corrupt";
    const FileLayout written = write(planned, data, p);
    const LayoutEntry& victim = written.entries[live[rng() % live.size()]];
    const std::uint64_t off = victim.container.file_offset + rng() % victim.chunk.chunk_size;
    {
      File f(p, File::Mode::read_write);
      std::byte x{};
      f.pread_exact(std::span<std::byte>(&x, 1), off);
      x ^= static_cast<std::byte>(1 + rng() % 255);
      f.pwrite_all(std::span<const std::byte>(&x, 1), off);
    }
    File f(p, File::Mode::read);
    try {
      read_layout(f);
    } catch (const PayloadChecksumError& e) {
      ++detected;
      if (e.dataset_id() == victim.container.dataset_id &&
          e.container_index() == victim.container.container_index) {
        ++attributed;
      }
    } catch (const Error&) {
    }
  }
  o.detail << " layouts=500 identity_failures=" << identity_failures
           << " data_failures=" << data_failures << " corruption_detected=" << detected << "/"
           << trials << " attributed=" << attributed;
  o.require(identity_failures == 0 && data_failures == 0, "round trip");
  o.require(detected == trials && attributed == trials, "corruption attribution");
  fs::remove_all(dir);
}

struct Criterion {
  int number;
  const char* name;
  std::function<void(Outcome&, const fs::path&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dcpkt acceptance checks"};
  std::vector<int> only;
  fs::path workdir = fs::temp_directory_path() / ("dcpkt_acceptance_" + std::to_string(::getpid()));
  app.add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, 10));
  app.add_option("--workdir", workdir, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const Criterion criteria[] = {
      {1, "collision rates", collision_rates},
      {2, "fletcher 0x0000/0xffff swap", fletcher_swap},
      {3, "cost model identities", model_identities},
      {4, "dirty detection exactness", detection_exactness},
      {5, "crash safety", crash_safety},
      {6, "dynamic dataset sizes", dynamic_sizes},
      {7, "differential I/O economy", io_economy},
      {8, "write coalescing", coalescing_effect},
      {9, "heat2d end to end", heat2d_end_to_end},
      {10, "checkpoint format round trip", format_round_trip},
  };

  fs::create_directories(workdir);
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      c.run(o, workdir);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.number << " " << c.name << ":"
              << o.detail.str() << " (" << std::fixed << std::setprecision(1) << s << "s)"
              << std::defaultfloat << std::setprecision(6) << std::endl;
    all = all && o.pass;
  }
  std::error_code ec;
  fs::remove_all(workdir, ec);
  return all ? 0 : 1;
}
