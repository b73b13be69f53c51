#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dcpkt/checkpoint_engine.hpp"
#include "dcpkt/hashing.hpp"

namespace dcpkt {

// ---- calibration ----

struct CalibrationConfig {
  std::uint64_t b = kDefaultBlockSize;
  std::uint64_t total_bytes = 64ull << 20;
  /// Directory on the filesystem under test; a scratch file is created in it.
  std::filesystem::path target = ".";
  int trials = 5;
  HashAlgorithm algorithm = HashAlgorithm::md5;
  std::uint64_t seed = 1;
};

struct CalibrationResult {
  std::uint64_t b = 0;
  HashAlgorithm algorithm = HashAlgorithm::md5;
  double t_w = 0;  // T_w / n, mean over trials
  double t_h = 0;  // mean per-block hash time, mean over trials
  double rho = 0;
  double t_w_variance = 0;  // across trial means
  double t_h_variance = 0;
  int trials = 0;
  std::uint64_t blocks_per_trial = 0;
};

CalibrationResult calibrate(const CalibrationConfig& config);

inline constexpr std::string_view kCalibrationCsvHeader =
    "algorithm,b,blocks,trials,t_w,t_w_var,t_h,t_h_var,rho";
void write_calibration_csv(const std::filesystem::path& path,
                           std::span<const CalibrationResult> rows);

// ---- chunk-size distribution ----

struct ChunkSizeCdf {
  std::vector<std::uint64_t> sizes;  // ascending
  std::vector<double> cumulative;    // parallel to sizes, ends at 1

  static ChunkSizeCdf from(std::vector<std::uint64_t> samples);
  bool valid() const;
  /// Fraction of samples <= x.
  double at(std::uint64_t x) const;
};

/// Long form: series,size,cumulative. One series per named distribution.
void write_chunk_cdf_csv(const std::filesystem::path& path,
                         std::span<const std::pair<std::string_view, const ChunkSizeCdf*>> series);

// ---- n_d matrix ----

struct NdCell {
  int rank = 0;
  std::uint64_t checkpoint = 0;  // ordinal within the run, 0 = first
  std::uint64_t step = 0;
  double n_d = 0;
};

inline constexpr std::string_view kNdMatrixCsvHeader = "rank,checkpoint,step,n_d";
void write_nd_matrix_csv(const std::filesystem::path& path, std::span<const NdCell> cells);

// ---- Heat2D ----

enum class Heat2DInit { hot_cell, uniform };

struct Heat2DConfig {
  std::uint64_t nx = 256;
  std::uint64_t ny = 256;  // decomposed into `ranks` row bands
  int ranks = 4;
  std::uint64_t steps = 500;
  std::uint64_t interval = 50;
  Heat2DInit init = Heat2DInit::hot_cell;
  /// Abandon the run after this step, recover from disk and finish. Unset: no kill.
  std::optional<std::uint64_t> kill_after_step;
  /// Compare each committed file against memory after every checkpoint.
  bool verify_checkpoints = true;
  std::filesystem::path outdir = "heat2d_out";
  /// checkpoint_directory is the root; rank r checkpoints into <root>/rank_r.
  EngineConfig engine;
};

struct Heat2DResult {
  std::vector<double> final_grid;  // ny * nx, row major, global
  std::vector<NdCell> nd_matrix;   // temperature grid only
  std::vector<std::vector<CheckpointMeta>> per_rank;
  ChunkSizeCdf region_cdf;
  ChunkSizeCdf write_cdf;
  std::uint64_t verify_failures = 0;
  std::optional<std::uint64_t> recovered_step;
};

/// Jacobi heat diffusion with fixed boundary cells and a 1D row decomposition.
/// Writes nd_matrix.csv and chunk_cdf.csv into outdir.
Heat2DResult run_heat2d(const Heat2DConfig& config);

// ---- synthetic update patterns ----

enum class PatternKind { uniform, wavefront, strided_growth };
std::string_view to_string(PatternKind kind) noexcept;
PatternKind parse_pattern_kind(std::string_view name);

struct UpdatePattern {
  PatternKind kind = PatternKind::uniform;
  /// UNIFORM: share of blocks mutated each step. WAVEFRONT: share mutated in
  /// ranks the front has reached.
  double fraction = 0.1;
  /// WAVEFRONT: ranks newly reached per step.
  double front_speed = 0.5;
  /// WAVEFRONT: rank 0 stays hot at hot_fraction throughout.
  bool hot_rank0 = true;
  double hot_fraction = 0.8;
  /// STRIDED_GROWTH: every stride-th block is mutated; datasets grow by
  /// growth_bytes every growth_every steps.
  std::uint64_t stride_blocks = 4;
  std::uint64_t growth_bytes = 1u << 20;
  std::uint64_t growth_every = 1;
  int ranks = 4;
  std::uint64_t steps = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PatternRunConfig {
  UpdatePattern pattern;
  std::uint64_t bytes_per_rank = 8ull << 20;
  /// Checkpoint every this many steps; mutations in between accumulate.
  std::uint64_t interval = 1;
  bool verify_checkpoints = true;
  std::filesystem::path outdir = "pattern_out";
  /// checkpoint_directory is the root; rank r checkpoints into <root>/rank_r.
  EngineConfig engine;
};

struct PatternResult {
  std::vector<std::vector<CheckpointMeta>> per_rank;  // [rank][checkpoint], checkpoint 0 is FULL
  std::vector<NdCell> nd_matrix;
  ChunkSizeCdf region_cdf;
  ChunkSizeCdf write_cdf;
  std::uint64_t verify_failures = 0;
  /// Distinct blocks the generator mutated since the previous checkpoint,
  /// [rank][checkpoint]; 0 for the first.
  std::vector<std::vector<std::uint64_t>> mutated_blocks;
};

/// Checkpoint 0 captures the initial buffers; afterwards every step mutates
/// and every interval-th step checkpoints. Writes nd_matrix.csv and chunk_cdf.csv into outdir.
PatternResult run_pattern(const PatternRunConfig& config);

// ---- block-size sweep ----

struct SweepWorkload {
  std::uint64_t bytes = 64ull << 20;
  std::uint64_t mutated_runs = 2000;  // scattered byte runs, identical for every b
  std::uint64_t run_length = 64;
  std::uint64_t seed = 1;
};

struct SweepRow {
  std::uint64_t b = 0;
  double relative_overhead = 0;  // (T_dcp - T_full) / T_full, measured
  double dcp_rate = 0;           // differential payload / protected bytes
  double hash_share = 0;         // of the differential checkpoint's hash + write time
  double write_share = 0;
  std::uint64_t hash_table_bytes = 0;
  double full_seconds = 0;
  double dcp_seconds = 0;
  std::uint64_t write_calls = 0;
};

inline constexpr std::string_view kSweepCsvHeader =
    "b,relative_overhead,dcp_rate,hash_share,write_share,hash_table_bytes,full_s,dcp_s,write_calls";

std::vector<SweepRow> block_size_sweep(std::span<const std::uint64_t> block_sizes,
                                       const SweepWorkload& workload, const EngineConfig& engine,
                                       const std::filesystem::path& outdir);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

}  // namespace dcpkt
