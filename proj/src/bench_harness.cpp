#include "dcpkt/bench_harness.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <random>

#include "dcpkt/error.hpp"
#include "dcpkt/file_io.hpp"

namespace dcpkt {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string(), errno);
  out << std::setprecision(9);
  return out;
}

void fill_random(std::span<std::byte> out, std::mt19937_64& rng) {
  std::size_t i = 0;
  for (; i + 8 <= out.size(); i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, 8);
  }
  if (i < out.size()) {
    const std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, out.size() - i);
  }
}

std::pair<double, double> mean_variance(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(xs.size() - 1)};
}

bool same_bytes(std::span<const std::byte> a, std::span<const std::byte> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size()) == 0);
}

// Bumps one byte inside block `index`, which always changes its content.
void touch_block(std::span<std::byte> data, std::uint64_t b, std::uint64_t index,
                 std::uint64_t salt) {
  const std::uint64_t off = index * b;
  const std::uint64_t len = std::min<std::uint64_t>(b, data.size() - off);
  auto& byte = data[static_cast<std::size_t>(off + salt % len)];
  byte = static_cast<std::byte>(static_cast<std::uint8_t>(byte) + 1);
}

void collect_sizes(const std::vector<std::vector<CheckpointMeta>>& per_rank,
                   std::vector<std::uint64_t>& regions, std::vector<std::uint64_t>& writes) {
  for (const auto& metas : per_rank) {
    for (const auto& m : metas) {
      if (m.kind != CheckpointKind::differential) continue;
      regions.insert(regions.end(), m.write_stats.region_sizes.begin(),
                     m.write_stats.region_sizes.end());
      writes.insert(writes.end(), m.write_stats.write_sizes.begin(),
                    m.write_stats.write_sizes.end());
    }
  }
}

}  // namespace

// ---- calibration ----

CalibrationResult calibrate(const CalibrationConfig& config) {
  if (config.b == 0) throw ValidationError("block size must be positive");
  if (config.total_bytes == 0 || config.total_bytes % config.b != 0) {
    throw ValidationError("total bytes must be a positive multiple of the block size");
  }
  if (config.trials <= 0) throw ValidationError("at least one trial is required");

  const std::uint64_t n = config.total_bytes / config.b;
  std::vector<std::byte> buffer(static_cast<std::size_t>(config.total_bytes));
  std::mt19937_64 rng(config.seed);
  fill_random(buffer, rng);

  fs::create_directories(config.target);
  const fs::path scratch = config.target / "dcpkt_calibrate.tmp";
  std::vector<double> tw, th;
  try {
    for (int trial = 0; trial < config.trials; ++trial) {
      auto t0 = Clock::now();
      {
        File f(scratch, File::Mode::create_truncate);
        f.pwrite_all(buffer, 0);
        f.sync();
        f.close();
      }
      tw.push_back(seconds_since(t0) / static_cast<double>(n));

      double sum = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::span<const std::byte> block(buffer.data() + i * config.b, config.b);
        t0 = Clock::now();
        const Digest d = hash_block(config.algorithm, block);
        sum += seconds_since(t0);
        // Keep the digest observable so the call is not elided.
        if (d.bytes()[0] == 0x5a && d.bytes()[1] == 0xa5) sum += 0.0;
      }
      th.push_back(sum / static_cast<double>(n));
    }
  } catch (...) {
    std::error_code ec;
    fs::remove(scratch, ec);
    throw;
  }
  std::error_code ec;
  fs::remove(scratch, ec);

  CalibrationResult r;
  r.b = config.b;
  r.algorithm = config.algorithm;
  std::tie(r.t_w, r.t_w_variance) = mean_variance(tw);
  std::tie(r.t_h, r.t_h_variance) = mean_variance(th);
  r.rho = r.t_h / r.t_w;
  r.trials = config.trials;
  r.blocks_per_trial = n;
  return r;
}

void write_calibration_csv(const fs::path& path, std::span<const CalibrationResult> rows) {
  auto out = open_csv(path);
  out << kCalibrationCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.b << ',' << r.blocks_per_trial << ',' << r.trials
        << ',' << r.t_w << ',' << r.t_w_variance << ',' << r.t_h << ',' << r.t_h_variance << ','
        << r.rho << '\n';
  }
}

// ---- CDF ----

ChunkSizeCdf ChunkSizeCdf::from(std::vector<std::uint64_t> samples) {
  ChunkSizeCdf cdf;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  cdf.cumulative.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    cdf.cumulative.push_back(static_cast<double>(i + 1) / n);
  }
  cdf.sizes = std::move(samples);
  return cdf;
}

bool ChunkSizeCdf::valid() const {
  if (sizes.size() != cumulative.size()) return false;
  if (sizes.empty()) return true;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] < sizes[i - 1] || cumulative[i] < cumulative[i - 1]) return false;
  }
  return cumulative.front() > 0 && cumulative.back() == 1.0;
}

double ChunkSizeCdf::at(std::uint64_t x) const {
  if (sizes.empty()) return 0;
  const auto it = std::upper_bound(sizes.begin(), sizes.end(), x);
  return static_cast<double>(it - sizes.begin()) / static_cast<double>(sizes.size());
}

void write_chunk_cdf_csv(const fs::path& path,
                         std::span<const std::pair<std::string_view, const ChunkSizeCdf*>> series) {
  auto out = open_csv(path);
  out << "series,size,cumulative\n";
  for (const auto& [name, cdf] : series) {
    for (std::size_t i = 0; i < cdf->sizes.size(); ++i) {
      // Only the last sample of a run of equal sizes carries the step height.
      if (i + 1 < cdf->sizes.size() && cdf->sizes[i + 1] == cdf->sizes[i]) continue;
      out << name << ',' << cdf->sizes[i] << ',' << cdf->cumulative[i] << '\n';
    }
  }
}

void write_nd_matrix_csv(const fs::path& path, std::span<const NdCell> cells) {
  auto out = open_csv(path);
  out << kNdMatrixCsvHeader << '\n';
  for (const auto& c : cells) {
    out << c.rank << ',' << c.checkpoint << ',' << c.step << ',' << c.n_d << '\n';
  }
}

// ---- Heat2D ----

namespace {

constexpr DatasetId kGridId = 0;
constexpr DatasetId kStepId = 1;

struct HeatRank {
  std::vector<double> u;
  std::vector<double> next;
  std::vector<std::uint64_t> step{0};
  std::uint64_t row0 = 0;
  std::uint64_t rows = 0;
  std::unique_ptr<CheckpointEngine> engine;
  std::uint64_t checkpoints = 0;
};

std::vector<HeatRank> make_heat_ranks(const Heat2DConfig& cfg, const fs::path& ckpt_root) {
  std::vector<HeatRank> ranks(static_cast<std::size_t>(cfg.ranks));
  const std::uint64_t rows = cfg.ny / static_cast<std::uint64_t>(cfg.ranks);
  for (int r = 0; r < cfg.ranks; ++r) {
    HeatRank& hr = ranks[static_cast<std::size_t>(r)];
    hr.rows = rows;
    hr.row0 = rows * static_cast<std::uint64_t>(r);
    hr.u.assign(rows * cfg.nx, 0.0);
    hr.next.assign(rows * cfg.nx, 0.0);
    EngineConfig ec = cfg.engine;
    ec.checkpoint_directory = ckpt_root / ("rank_" + std::to_string(r));
    hr.engine = std::make_unique<CheckpointEngine>(ec);
  }
  return ranks;
}

void protect_heat(HeatRank& hr) {
  hr.engine->protect(kGridId, DataRegion::of(hr.u));
  hr.engine->protect(kStepId, DataRegion::of(hr.step));
}

void heat_advance(std::vector<HeatRank>& ranks, std::uint64_t nx, std::uint64_t ny) {
  std::vector<double> above(nx), below(nx);
  for (std::size_t r = 0; r < ranks.size(); ++r) {
    HeatRank& hr = ranks[r];
    if (r > 0) {
      const auto& up = ranks[r - 1];
      std::copy_n(up.u.begin() + static_cast<std::ptrdiff_t>((up.rows - 1) * nx), nx, above.begin());
    }
    if (r + 1 < ranks.size()) {
      std::copy_n(ranks[r + 1].u.begin(), nx, below.begin());
    }
    for (std::uint64_t i = 0; i < hr.rows; ++i) {
      const std::uint64_t g = hr.row0 + i;
      double* out = hr.next.data() + i * nx;
      const double* cur = hr.u.data() + i * nx;
      if (g == 0 || g == ny - 1) {
        std::copy_n(cur, nx, out);
        continue;
      }
      const double* up = i > 0 ? cur - nx : above.data();
      const double* down = i + 1 < hr.rows ? cur + nx : below.data();
      out[0] = cur[0];
      out[nx - 1] = cur[nx - 1];
      for (std::uint64_t j = 1; j + 1 < nx; ++j) {
        out[j] = 0.25 * ((up[j] + down[j]) + (cur[j - 1] + cur[j + 1]));
      }
    }
  }
  for (auto& hr : ranks) std::swap(hr.u, hr.next);
}

bool verify_committed(const CheckpointEngine& engine,
                      std::span<const std::pair<DatasetId, std::span<const std::byte>>> expected) {
  const auto state = engine.commit_state();
  if (!state.committed_file) return false;
  const auto loaded = load_checkpoint(*state.committed_file);
  for (const auto& [id, bytes] : expected) {
    auto it = loaded.find(id);
    if (it == loaded.end() || !same_bytes(it->second, bytes)) return false;
  }
  return true;
}

double dataset_nd(const CheckpointMeta& m, DatasetId id) {
  for (const auto& d : m.per_dataset) {
    if (d.id == id) {
      return d.total_blocks == 0 ? 0.0
                                 : static_cast<double>(d.dirty_blocks) /
                                       static_cast<double>(d.total_blocks);
    }
  }
  return 0.0;
}

}  // namespace

Heat2DResult run_heat2d(const Heat2DConfig& cfg) {
  if (cfg.ranks <= 0) throw ValidationError("rank count must be positive");
  if (cfg.nx < 3 || cfg.ny < 3) throw ValidationError("grid must be at least 3x3");
  if (cfg.ny % static_cast<std::uint64_t>(cfg.ranks) != 0) {
    throw ValidationError("ny=" + std::to_string(cfg.ny) + " is not divisible by " +
                          std::to_string(cfg.ranks) + " ranks");
  }
  if (cfg.interval == 0) throw ValidationError("checkpoint interval must be positive");

  const fs::path ckpt_root = cfg.engine.checkpoint_directory;
  for (int r = 0; r < cfg.ranks; ++r) fs::remove_all(ckpt_root / ("rank_" + std::to_string(r)));

  Heat2DResult result;
  result.per_rank.resize(static_cast<std::size_t>(cfg.ranks));
  auto ranks = make_heat_ranks(cfg, ckpt_root);
  for (auto& hr : ranks) {
    for (std::uint64_t i = 0; i < hr.rows; ++i) {
      for (std::uint64_t j = 0; j < cfg.nx; ++j) {
        double v = 0.0;
        if (cfg.init == Heat2DInit::uniform) {
          v = 1.0;
        } else if (hr.row0 + i == cfg.ny / 2 && j == cfg.nx / 2) {
          v = 1000.0;
        }
        hr.u[i * cfg.nx + j] = v;
      }
    }
    protect_heat(hr);
  }

  bool killed = false;
  std::uint64_t step = 0;
  while (true) {
    if (step % cfg.interval == 0) {
      for (std::size_t r = 0; r < ranks.size(); ++r) {
        HeatRank& hr = ranks[r];
        const CheckpointMeta m = hr.engine->checkpoint();
        result.nd_matrix.push_back({static_cast<int>(r), hr.checkpoints++, step, dataset_nd(m, kGridId)});
        result.per_rank[r].push_back(m);
        if (cfg.verify_checkpoints) {
          const std::pair<DatasetId, std::span<const std::byte>> expected[] = {
              {kGridId, std::as_bytes(std::span(hr.u))},
              {kStepId, std::as_bytes(std::span(hr.step))}};
          if (!verify_committed(*hr.engine, expected)) ++result.verify_failures;
        }
      }
    }
    if (cfg.kill_after_step && !killed && step >= *cfg.kill_after_step) {
      killed = true;
      std::vector<std::uint64_t> counts;
      for (const auto& hr : ranks) counts.push_back(hr.checkpoints);
      ranks.clear();
      ranks = make_heat_ranks(cfg, ckpt_root);
      std::optional<std::uint64_t> resumed;
      for (std::size_t r = 0; r < ranks.size(); ++r) {
        HeatRank& hr = ranks[r];
        hr.checkpoints = counts[r];
        protect_heat(hr);
        hr.engine->recover();
        if (hr.u.size() != hr.rows * cfg.nx) throw CorruptionError("recovered grid has wrong size");
        if (resumed && *resumed != hr.step[0]) {
          throw CorruptionError("ranks recovered to different steps");
        }
        resumed = hr.step[0];
      }
      step = *resumed;
      result.recovered_step = step;
    }
    if (step >= cfg.steps) break;
    heat_advance(ranks, cfg.nx, cfg.ny);
    ++step;
    for (auto& hr : ranks) hr.step[0] = step;
  }

  result.final_grid.reserve(cfg.nx * cfg.ny);
  for (const auto& hr : ranks) result.final_grid.insert(result.final_grid.end(), hr.u.begin(), hr.u.end());

  std::vector<std::uint64_t> regions, writes;
  collect_sizes(result.per_rank, regions, writes);
  result.region_cdf = ChunkSizeCdf::from(std::move(regions));
  result.write_cdf = ChunkSizeCdf::from(std::move(writes));
  write_nd_matrix_csv(cfg.outdir / "nd_matrix.csv", result.nd_matrix);
  const std::pair<std::string_view, const ChunkSizeCdf*> series[] = {
      {"region", &result.region_cdf}, {"write", &result.write_cdf}};
  write_chunk_cdf_csv(cfg.outdir / "chunk_cdf.csv", series);
  return result;
}

// ---- synthetic patterns ----

std::string_view to_string(PatternKind kind) noexcept {
  switch (kind) {
    case PatternKind::uniform: return "uniform";
    case PatternKind::wavefront: return "wavefront";
    case PatternKind::strided_growth: return "strided_growth";
  }
  return "?";
}

PatternKind parse_pattern_kind(std::string_view name) {
  std::string s(name);
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '-') c = '_';
  }
  if (s == "uniform") return PatternKind::uniform;
  if (s == "wavefront") return PatternKind::wavefront;
  if (s == "strided_growth" || s == "strided") return PatternKind::strided_growth;
  throw ValidationError("unknown pattern '" + std::string(name) + "'");
}

void UpdatePattern::validate() const {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(fraction)) throw ValidationError("fraction must lie in [0, 1]");
  if (!in_unit(hot_fraction)) throw ValidationError("hot fraction must lie in [0, 1]");
  if (!(front_speed > 0)) throw ValidationError("front speed must be positive");
  if (ranks <= 0) throw ValidationError("rank count must be positive");
  if (kind == PatternKind::strided_growth && (stride_blocks == 0 || growth_every == 0)) {
    throw ValidationError("stride and growth period must be positive");
  }
}

PatternResult run_pattern(const PatternRunConfig& cfg) {
  const UpdatePattern& pat = cfg.pattern;
  pat.validate();
  if (cfg.bytes_per_rank == 0) throw ValidationError("bytes per rank must be positive");

  if (cfg.interval == 0) throw ValidationError("checkpoint interval must be positive");
  const fs::path ckpt_root = cfg.engine.checkpoint_directory;
  for (int r = 0; r < pat.ranks; ++r) fs::remove_all(ckpt_root / ("rank_" + std::to_string(r)));
  const std::uint64_t b = cfg.engine.block_size;
  const auto nranks = static_cast<std::size_t>(pat.ranks);

  std::vector<std::vector<std::byte>> buffers(nranks);
  std::vector<std::unique_ptr<CheckpointEngine>> engines;
  std::vector<std::mt19937_64> rngs;
  std::vector<std::vector<std::uint64_t>> chosen(nranks);
  PatternResult result;
  result.per_rank.resize(nranks);
  result.mutated_blocks.resize(nranks);

  auto record = [&](std::size_t r, std::uint64_t step, const CheckpointMeta& m) {
    result.nd_matrix.push_back({static_cast<int>(r), result.per_rank[r].size(), step, m.n_d});
    result.per_rank[r].push_back(m);
    if (cfg.verify_checkpoints) {
      const std::pair<DatasetId, std::span<const std::byte>> expected[] = {
          {0, std::span<const std::byte>(buffers[r])}};
      if (!verify_committed(*engines[r], expected)) ++result.verify_failures;
    }
  };

  for (std::size_t r = 0; r < nranks; ++r) {
    rngs.emplace_back(pat.seed * 0x9E3779B97F4A7C15ull + r);
    buffers[r].resize(static_cast<std::size_t>(cfg.bytes_per_rank));
    fill_random(buffers[r], rngs[r]);
    EngineConfig ec = cfg.engine;
    ec.checkpoint_directory = ckpt_root / ("rank_" + std::to_string(r));
    engines.push_back(std::make_unique<CheckpointEngine>(ec));
    engines[r]->protect(0, DataRegion::of(buffers[r]));

    if (pat.kind == PatternKind::uniform) {
      const std::uint64_t n = blocks_for(cfg.bytes_per_rank, b);
      std::vector<std::uint64_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rngs[r]);
      const auto k = static_cast<std::size_t>(std::llround(pat.fraction * static_cast<double>(n)));
      chosen[r].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(chosen[r].begin(), chosen[r].end());
    }
  }
  for (std::size_t r = 0; r < nranks; ++r) {
    record(r, 0, engines[r]->checkpoint());
    result.mutated_blocks[r].push_back(0);
  }
  std::vector<std::vector<bool>> since(nranks);

  for (std::uint64_t s = 1; s <= pat.steps; ++s) {
    for (std::size_t r = 0; r < nranks; ++r) {
      auto& buf = buffers[r];
      const std::uint64_t n = blocks_for(buf.size(), b);
      std::vector<std::uint64_t> blocks;
      switch (pat.kind) {
        case PatternKind::uniform:
          blocks = chosen[r];
          break;
        case PatternKind::wavefront: {
          double f = 0.0;
          if (r == 0 && pat.hot_rank0) {
            f = pat.hot_fraction;
          } else if (static_cast<double>(r) < pat.front_speed * static_cast<double>(s)) {
            f = pat.fraction;
          }
          std::vector<std::uint64_t> all(n);
          std::iota(all.begin(), all.end(), 0);
          const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
          for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(all[i], all[pick(rngs[r])]);
          }
          blocks.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
          break;
        }
        case PatternKind::strided_growth:
          for (std::uint64_t i = s % pat.stride_blocks; i < n; i += pat.stride_blocks) {
            blocks.push_back(i);
          }
          break;
      }
      since[r].resize(n, false);
      for (std::uint64_t blk : blocks) {
        touch_block(buf, b, blk, s * 7919 + r);
        since[r][blk] = true;
      }

      if (pat.kind == PatternKind::strided_growth && s % pat.growth_every == 0) {
        const std::size_t old = buf.size();
        buf.resize(old + static_cast<std::size_t>(pat.growth_bytes));
        fill_random(std::span<std::byte>(buf).subspan(old), rngs[r]);
        engines[r]->protect(0, DataRegion::of(buf));
      }
      if (s % cfg.interval == 0 || s == pat.steps) {
        result.mutated_blocks[r].push_back(
            static_cast<std::uint64_t>(std::count(since[r].begin(), since[r].end(), true)));
        since[r].assign(since[r].size(), false);
        record(r, s, engines[r]->checkpoint());
      }
    }
  }

  std::vector<std::uint64_t> regions, writes;
  collect_sizes(result.per_rank, regions, writes);
  result.region_cdf = ChunkSizeCdf::from(std::move(regions));
  result.write_cdf = ChunkSizeCdf::from(std::move(writes));
  write_nd_matrix_csv(cfg.outdir / "nd_matrix.csv", result.nd_matrix);
  const std::pair<std::string_view, const ChunkSizeCdf*> series[] = {
      {"region", &result.region_cdf}, {"write", &result.write_cdf}};
  write_chunk_cdf_csv(cfg.outdir / "chunk_cdf.csv", series);
  return result;
}

// ---- block-size sweep ----

std::vector<SweepRow> block_size_sweep(std::span<const std::uint64_t> block_sizes,
                                       const SweepWorkload& workload, const EngineConfig& engine,
                                       const fs::path& outdir) {
  if (workload.bytes == 0) throw ValidationError("sweep workload is empty");
  if (workload.run_length == 0 || workload.run_length > workload.bytes) {
    throw ValidationError("mutation run length must lie in [1, bytes]");
  }
  std::vector<SweepRow> rows;
  for (std::uint64_t b : block_sizes) {
    if (b == 0) throw ValidationError("block size must be positive");
    const fs::path dir = outdir / ("b_" + std::to_string(b));
    fs::remove_all(dir);

    std::mt19937_64 rng(workload.seed);
    std::vector<std::byte> data(static_cast<std::size_t>(workload.bytes));
    fill_random(data, rng);

    EngineConfig ec = engine;
    ec.block_size = b;
    ec.coalescing_threshold_bytes = std::max<std::size_t>(ec.coalescing_threshold_bytes, b);
    ec.checkpoint_directory = dir / "dcp";
    ec.dcp_enabled = true;
    ec.write_log = false;
    SweepRow row;
    row.b = b;
    {
      CheckpointEngine dcp(ec);
      dcp.protect(0, DataRegion::of(data));
      dcp.checkpoint();

      std::uniform_int_distribution<std::uint64_t> where(0, workload.bytes - workload.run_length);
      for (std::uint64_t i = 0; i < workload.mutated_runs; ++i) {
        const std::uint64_t off = where(rng);
        for (std::uint64_t k = 0; k < workload.run_length; ++k) {
          auto& byte = data[static_cast<std::size_t>(off + k)];
          byte = static_cast<std::byte>(static_cast<std::uint8_t>(byte) ^ 0x5a);
        }
      }
      const CheckpointMeta m = dcp.checkpoint();
      row.dcp_seconds = m.wall_time_write + m.wall_time_hash;
      row.dcp_rate = static_cast<double>(m.bytes_written_payload) / static_cast<double>(workload.bytes);
      row.hash_share = row.dcp_seconds > 0 ? m.wall_time_hash / row.dcp_seconds : 0.0;
      row.write_share = row.dcp_seconds > 0 ? m.wall_time_write / row.dcp_seconds : 0.0;
      row.hash_table_bytes = dcp.dataset(0).metadata_bytes();
      row.write_calls = m.write_stats.write_calls;
    }
    {
      EngineConfig fc = ec;
      fc.checkpoint_directory = dir / "full";
      fc.dcp_enabled = false;
      fc.async_duplicate = false;
      CheckpointEngine full(fc);
      full.protect(0, DataRegion::of(data));
      const CheckpointMeta m = full.checkpoint();
      row.full_seconds = m.wall_time_write + m.wall_time_hash;
    }
    row.relative_overhead =
        row.full_seconds > 0 ? (row.dcp_seconds - row.full_seconds) / row.full_seconds : 0.0;
    rows.push_back(row);
    fs::remove_all(dir);
  }
  return rows;
}

void write_sweep_csv(const fs::path& path, std::span<const SweepRow> rows) {
  auto out = open_csv(path);
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.b << ',' << r.relative_overhead << ',' << r.dcp_rate << ',' << r.hash_share << ','
        << r.write_share << ',' << r.hash_table_bytes << ',' << r.full_seconds << ','
        << r.dcp_seconds << ',' << r.write_calls << '\n';
  }
}

}  // namespace dcpkt
