#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcpkt/bench_harness.hpp"
#include "dcpkt/checkpoint_engine.hpp"
#include "dcpkt/collision.hpp"
#include "dcpkt/container_format.hpp"
#include "dcpkt/cost_model.hpp"
#include "dcpkt/error.hpp"
#include "dcpkt/hashing.hpp"

namespace fs = std::filesystem;
using namespace dcpkt;

namespace {

HashAlgorithm algorithm_or_throw(const std::string& name) {
  auto alg = parse_hash_algorithm(name);
  if (!alg) throw ValidationError("unknown hash algorithm '" + name + "'");
  return *alg;
}

fs::path checkpoint_root(const fs::path& outdir) {
  if (const char* env = std::getenv("DCPKT_DIR"); env && *env) return fs::path(env);
  return outdir / "ckpt";
}

// ---- collide ----

struct CollideArgs {
  std::vector<std::string> algorithms{"adler32", "fletcher32-65536", "fletcher32-65535", "crc32", "md5"};
  std::vector<std::uint64_t> block_sizes{128, 256, 512, 1024};
  std::uint64_t iterations = 1'000'000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
};

int run_collide(const CollideArgs& a) {
  CollisionConfig cfg;
  for (const auto& n : a.algorithms) cfg.algorithms.push_back(algorithm_or_throw(n));
  cfg.block_sizes.assign(a.block_sizes.begin(), a.block_sizes.end());
  cfg.iterations = a.iterations;
  cfg.rng_seed = a.seed;
  cfg.workers = a.workers;
  const CollisionReport report = avalanche_collision_test(cfg);
  if (a.out.empty()) {
    report.write_csv(std::cout);
  } else {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw IoError("cannot open " + a.out, errno);
    report.write_csv(out);
  }
  std::uint64_t collisions = 0;
  for (const auto& r : report.rows) collisions += r.collisions;
  (a.out.empty() ? std::cerr : std::cout)
      << "collide: " << report.rows.size() << " cells, " << collisions << " collisions"
      << (a.out.empty() ? "" : ", wrote " + a.out) << '\n';
  return 0;
}

// ---- calibrate ----

struct CalibrateArgs {
  std::vector<std::uint64_t> block_sizes{kDefaultBlockSize};
  std::uint64_t bytes = 64ull << 20;
  std::string path = ".";
  int trials = 5;
  std::vector<std::string> algorithms{"md5", "crc32"};
  std::string out = "calibration.csv";
};

int run_calibrate(const CalibrateArgs& a) {
  std::vector<CalibrationResult> rows;
  for (std::uint64_t b : a.block_sizes) {
    for (const auto& n : a.algorithms) {
      CalibrationConfig cfg;
      cfg.b = b;
      cfg.total_bytes = a.bytes;
      cfg.target = a.path;
      cfg.trials = a.trials;
      cfg.algorithm = algorithm_or_throw(n);
      rows.push_back(calibrate(cfg));
      const auto& r = rows.back();
      std::cout << "calibrate: " << to_string(r.algorithm) << " b=" << r.b << " t_w=" << r.t_w
                << " t_h=" << r.t_h << " rho=" << r.rho << '\n';
    }
  }
  write_calibration_csv(a.out, rows);
  return 0;
}

// ---- estimate ----

struct EstimateArgs {
  double tw = 0;
  double th = 0;
  double nd = 0;
  std::uint64_t b = kDefaultBlockSize;
  std::string corrections;
};

int run_estimate(const EstimateArgs& a) {
  const CostModelParams p{a.b, a.tw, a.th};
  const double t = tau(p, a.nd);
  std::cout << std::setprecision(6) << "rho=" << p.rho() << " tau=" << t << " eta=" << eta(p)
            << " S=" << speedup(p, a.nd) << " verdict=" << to_string(verdict(p, a.nd)) << '\n';
  if (!a.corrections.empty()) {
    std::ifstream in(a.corrections);
    if (!in) throw IoError("cannot open " + a.corrections, errno);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("corrections file: " + std::string(e.what()));
    }
    CorrectionTerms c;
    double nd_prime = 0;
    try {
      c.delta_t_w = j.value("delta_t_w", 0.0);
      c.extra_block_write_time = j.value("extra_block_write_time", 0.0);
      c.extra_block_hash_time = j.value("extra_block_hash_time", 0.0);
      nd_prime = j.value("n_d_prime", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("corrections file: " + std::string(e.what()));
    }
    std::cout << "tau'=" << corrected_tau(p, c, a.nd, nd_prime) << '\n';
  }
  return 0;
}

// ---- bench ----

struct BenchArgs {
  std::string pattern = "uniform";
  int ranks = 4;
  std::uint64_t bytes = 8ull << 20;
  std::uint64_t steps = 10;
  std::uint64_t interval = 1;
  std::vector<std::uint64_t> block_sizes{kDefaultBlockSize};
  std::string algorithm = "md5";
  bool coalesce = true;
  double fraction = 0.1;
  std::uint64_t seed = 1;
  std::int64_t latency_us = 0;
  std::string outdir = "bench_out";
};

EngineConfig bench_engine(const BenchArgs& a, std::uint64_t b) {
  EngineConfig ec;
  ec.block_size = b;
  ec.algorithm = algorithm_or_throw(a.algorithm);
  ec.coalescing_enabled = a.coalesce;
  ec.coalescing_threshold_bytes = std::max<std::size_t>(ec.coalescing_threshold_bytes, b);
  ec.emulated_write_latency = std::chrono::microseconds(a.latency_us);
  ec.checkpoint_directory = checkpoint_root(a.outdir);
  return ec;
}

int run_bench(const BenchArgs& a) {
  if (a.pattern == "sweep") {
    SweepWorkload w;
    w.bytes = a.bytes;
    w.seed = a.seed;
    const auto rows = block_size_sweep(a.block_sizes, w, bench_engine(a, a.block_sizes.front()),
                                       fs::path(a.outdir) / "sweep");
    write_sweep_csv(fs::path(a.outdir) / "blocksize_sweep.csv", rows);
    std::cout << "bench: sweep over " << rows.size() << " block sizes, wrote "
              << (fs::path(a.outdir) / "blocksize_sweep.csv").string() << '\n';
    return 0;
  }
  if (a.block_sizes.size() != 1) throw ValidationError("--b takes one value unless --pattern sweep");
  PatternRunConfig cfg;
  cfg.pattern.kind = parse_pattern_kind(a.pattern);
  cfg.pattern.ranks = a.ranks;
  cfg.pattern.steps = a.steps;
  cfg.pattern.fraction = a.fraction;
  cfg.pattern.seed = a.seed;
  cfg.bytes_per_rank = a.bytes;
  cfg.interval = a.interval;
  cfg.outdir = a.outdir;
  cfg.engine = bench_engine(a, a.block_sizes.front());
  const PatternResult r = run_pattern(cfg);

  double nd_sum = 0;
  std::uint64_t diffs = 0, payload = 0, writes = 0;
  for (const auto& metas : r.per_rank) {
    for (const auto& m : metas) {
      if (m.kind != CheckpointKind::differential) continue;
      nd_sum += m.n_d;
      payload += m.bytes_written_payload;
      writes += m.write_stats.write_calls;
      ++diffs;
    }
  }
  std::cout << "bench: " << to_string(cfg.pattern.kind) << " ranks=" << a.ranks
            << " differential=" << diffs << " mean_n_d=" << (diffs ? nd_sum / diffs : 0.0)
            << " payload_bytes=" << payload << " write_calls=" << writes
            << " verify_failures=" << r.verify_failures << '\n';
  return r.verify_failures == 0 ? 0 : 2;
}

// ---- heat2d ----

struct HeatArgs {
  std::uint64_t nx = 256;
  std::uint64_t ny = 256;
  int ranks = 4;
  std::uint64_t steps = 500;
  std::uint64_t interval = 50;
  std::int64_t kill_after = -1;
  std::string init = "hot";
  std::uint64_t b = kDefaultBlockSize;
  std::string algorithm = "md5";
  std::string outdir = "heat2d_out";
};

int run_heat(const HeatArgs& a) {
  Heat2DConfig cfg;
  cfg.nx = a.nx;
  cfg.ny = a.ny;
  cfg.ranks = a.ranks;
  cfg.steps = a.steps;
  cfg.interval = a.interval;
  if (a.init == "uniform") {
    cfg.init = Heat2DInit::uniform;
  } else if (a.init != "hot") {
    throw ValidationError("--init must be hot or uniform");
  }
  cfg.engine.block_size = a.b;
  cfg.engine.coalescing_threshold_bytes = std::max<std::size_t>(cfg.engine.coalescing_threshold_bytes, a.b);
  cfg.engine.algorithm = algorithm_or_throw(a.algorithm);
  cfg.outdir = a.outdir;
  cfg.engine.checkpoint_directory = checkpoint_root(cfg.outdir);

  std::optional<std::vector<double>> reference;
  if (a.kill_after >= 0) {
    Heat2DConfig ref = cfg;
    ref.outdir = cfg.outdir / "reference";
    ref.engine.checkpoint_directory = cfg.engine.checkpoint_directory / "reference";
    reference = run_heat2d(ref).final_grid;
    cfg.kill_after_step = static_cast<std::uint64_t>(a.kill_after);
  }
  const Heat2DResult r = run_heat2d(cfg);
  std::cout << "heat2d: " << a.nx << "x" << a.ny << " ranks=" << a.ranks << " steps=" << a.steps
            << " checkpoints=" << (r.per_rank.empty() ? 0 : r.per_rank.front().size())
            << " verify_failures=" << r.verify_failures;
  bool ok = r.verify_failures == 0;
  if (reference) {
    const bool exact = reference->size() == r.final_grid.size() &&
                       std::memcmp(reference->data(), r.final_grid.data(),
                                   r.final_grid.size() * sizeof(double)) == 0;
    std::cout << " recovered_at=" << r.recovered_step.value_or(0)
              << " bit_exact=" << (exact ? "yes" : "no");
    ok = ok && exact;
  }
  std::cout << '\n';
  return ok ? 0 : 2;
}

// ---- inspect ----

int run_inspect(const std::string& path, bool csv) {
  File f(path, File::Mode::read);
  const ParsedFile parsed = inspect_layout(f);
  const FileLayout& l = parsed.layout;
  bool ok = parsed.meta_checksum_ok;
  if (csv) {
    std::cout << "dataset_id,container_index,file_offset,chunk_size,container_size,checksum,status\n";
  } else {
    std::cout << "file " << path << "\n  version " << l.meta.version << "  block_size "
              << l.meta.block_size << "  algorithm " << to_string(l.meta.algorithm)
              << "  checkpoint " << l.meta.checkpoint_id << "\n  meta checksum "
              << l.meta.meta_checksum.hex() << (parsed.meta_checksum_ok ? " OK" : " BAD") << '\n';
    for (const auto& d : l.meta.datasets) {
      std::cout << "  dataset " << d.id << " committed_size " << d.size << '\n';
    }
  }
  for (std::size_t i = 0; i < l.entries.size(); ++i) {
    const LayoutEntry& e = l.entries[i];
    const bool payload_ok = i < parsed.payload_ok.size() && parsed.payload_ok[i];
    ok = ok && payload_ok;
    const char* status = !parsed.meta_checksum_ok ? "UNVERIFIED" : (payload_ok ? "OK" : "BAD");
    if (csv) {
      std::cout << e.chunk.dataset_id << ',' << e.chunk.container_index << ','
                << e.container.file_offset << ',' << e.chunk.chunk_size << ','
                << e.chunk.container_size << ',' << e.chunk.payload_checksum.hex() << ',' << status
                << '\n';
    } else {
      std::cout << "  chunk dataset " << e.chunk.dataset_id << " #" << e.chunk.container_index
                << " offset " << e.container.file_offset << " chunk " << e.chunk.chunk_size
                << "/" << e.chunk.container_size << " checksum " << e.chunk.payload_checksum.hex()
                << ' ' << status << '\n';
    }
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential checkpointing toolkit"};
  app.require_subcommand(1);

  CollideArgs collide;
  auto* c = app.add_subcommand("collide", "avalanche collision test");
  c->add_option("--alg", collide.algorithms, "hash algorithms")->delimiter(',');
  c->add_option("--b", collide.block_sizes, "block sizes in bytes")->delimiter(',');
  c->add_option("--iters", collide.iterations, "trials per (b, pattern)");
  c->add_option("--seed", collide.seed);
  c->add_option("--workers", collide.workers, "0 = all cores");
  c->add_option("--out", collide.out, "CSV path; stdout when omitted");

  CalibrateArgs cal;
  auto* k = app.add_subcommand("calibrate", "measure t_w and t_h");
  k->add_option("--b", cal.block_sizes)->delimiter(',')->transform(CLI::AsSizeValue(false));
  k->add_option("--bytes", cal.bytes)->transform(CLI::AsSizeValue(false));
  k->add_option("--path", cal.path, "directory on the filesystem under test");
  k->add_option("--trials", cal.trials);
  k->add_option("--alg", cal.algorithms)->delimiter(',');
  k->add_option("--out", cal.out);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "evaluate the cost model");
  e->add_option("--tw", est.tw, "seconds to write one block")->required();
  e->add_option("--th", est.th, "seconds to hash one block")->required();
  e->add_option("--nd", est.nd, "dirty block fraction")->required();
  e->add_option("--b", est.b)->transform(CLI::AsSizeValue(false));
  e->add_option("--corrections", est.corrections, "JSON file with correction terms");

  BenchArgs bench;
  auto* bn = app.add_subcommand("bench", "synthetic update patterns and block-size sweep");
  bn->add_option("--pattern", bench.pattern, "uniform, wavefront, strided_growth or sweep");
  bn->add_option("--ranks", bench.ranks);
  bn->add_option("--bytes", bench.bytes, "bytes per rank")->transform(CLI::AsSizeValue(false));
  bn->add_option("--steps", bench.steps);
  bn->add_option("--interval", bench.interval);
  bn->add_option("--b", bench.block_sizes)->delimiter(',')->transform(CLI::AsSizeValue(false));
  bn->add_option("--alg", bench.algorithm);
  bn->add_option("--coalesce", bench.coalesce);
  bn->add_option("--fraction", bench.fraction);
  bn->add_option("--seed", bench.seed);
  bn->add_option("--latency-us", bench.latency_us, "emulated per-write latency");
  bn->add_option("--outdir", bench.outdir);

  HeatArgs heat;
  auto* h = app.add_subcommand("heat2d", "Heat2D workload under checkpointing");
  h->add_option("--nx", heat.nx);
  h->add_option("--ny", heat.ny);
  h->add_option("--ranks", heat.ranks);
  h->add_option("--steps", heat.steps);
  h->add_option("--interval", heat.interval);
  h->add_option("--kill-after", heat.kill_after, "recover after this step and compare");
  h->add_option("--init", heat.init, "hot or uniform");
  h->add_option("--b", heat.b)->transform(CLI::AsSizeValue(false));
  h->add_option("--alg", heat.algorithm);
  h->add_option("--outdir", heat.outdir);

  std::string inspect_path;
  bool inspect_csv = false;
  auto* in = app.add_subcommand("inspect", "dump a checkpoint file");
  in->add_option("file", inspect_path)->required();
  in->add_flag("--csv", inspect_csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 1;
  }

  try {
    if (*c) return run_collide(collide);
    if (*k) return run_calibrate(cal);
    if (*e) return run_estimate(est);
    if (*bn) return run_bench(bench);
    if (*h) return run_heat(heat);
    if (*in) return run_inspect(inspect_path, inspect_csv);
  } catch (const ValidationError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  } catch (const LayoutError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  } catch (const StateError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 1;
}
