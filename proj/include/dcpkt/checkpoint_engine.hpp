#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "dcpkt/block_tracker.hpp"
#include "dcpkt/coalescing_writer.hpp"
#include "dcpkt/container_format.hpp"
#include "dcpkt/error.hpp"
#include "dcpkt/hashing.hpp"

namespace dcpkt {

/// Non-owning reference to application memory. The identity of a vector-backed
/// region is the vector object itself, so reallocation does not change it.
class DataRegion {
 public:
  template <class T>
    requires std::is_trivially_copyable_v<T>
  static DataRegion of(std::vector<T>& v) {
    DataRegion r;
    r.target_ = &v;
    r.bytes_fn_ = [](void* p) {
      auto& vec = *static_cast<std::vector<T>*>(p);
      return std::as_writable_bytes(std::span<T>(vec));
    };
    r.resize_fn_ = [](void* p, std::size_t n) {
      if (n % sizeof(T) != 0) throw ValidationError("size is not a whole number of elements");
      static_cast<std::vector<T>*>(p)->resize(n / sizeof(T));
    };
    return r;
  }

  /// Fixed-capacity region; resize beyond the span throws.
  static DataRegion of(std::span<std::byte> fixed) {
    DataRegion r;
    r.fixed_ = fixed;
    r.target_ = fixed.data();
    return r;
  }

  const void* identity() const noexcept { return target_; }
  std::span<std::byte> bytes() const { return bytes_fn_ ? bytes_fn_(target_) : fixed_; }
  bool resizable() const noexcept { return resize_fn_ != nullptr; }
  /// Resizes a vector-backed region to exactly `n` bytes; a fixed region only
  /// checks that `n` fits.
  void fit(std::size_t n) const;

 private:
  void* target_ = nullptr;
  std::span<std::byte> fixed_;
  std::span<std::byte> (*bytes_fn_)(void*) = nullptr;
  void (*resize_fn_)(void*, std::size_t) = nullptr;
};

struct EngineConfig {
  std::filesystem::path checkpoint_directory = "dcpkt_ckpt";
  std::uint64_t block_size = kDefaultBlockSize;
  HashAlgorithm algorithm = HashAlgorithm::md5;
  std::size_t coalescing_threshold_bytes = kDefaultCoalescingThreshold;
  bool coalescing_enabled = true;
  std::size_t coalescing_max_gap_bytes = 1u << 20;
  bool dcp_enabled = true;
  /// Duplicate each new checkpoint in the background for the next cycle.
  bool async_duplicate = true;
  std::chrono::microseconds emulated_write_latency{0};
  /// Append one row per checkpoint to <dir>/ckpt_log.csv.
  bool write_log = true;

  void validate() const;
};

enum class CheckpointKind { full, differential };
std::string_view to_string(CheckpointKind kind) noexcept;

struct DatasetCheckpointStats {
  DatasetId id = 0;
  std::uint64_t dirty_blocks = 0;  // dirty or invalid blocks written
  std::uint64_t total_blocks = 0;
  std::uint64_t containers = 0;    // containers after this checkpoint
};

struct CheckpointMeta {
  std::uint64_t checkpoint_id = 0;
  CheckpointKind kind = CheckpointKind::full;
  std::uint64_t bytes_written_payload = 0;
  std::uint64_t bytes_written_metadata = 0;
  std::uint64_t region_count = 0;
  double wall_time_write = 0;  // seconds
  double wall_time_hash = 0;   // seconds
  double n_d = 1.0;
  std::uint64_t dirty_blocks = 0;
  std::uint64_t total_blocks = 0;
  std::uint64_t protected_bytes = 0;
  WriteStats write_stats;
  std::vector<DatasetCheckpointStats> per_dataset;  // ascending id
};

enum class CommitPhase { idle, duplicating, updating, committing };
std::string_view to_string(CommitPhase phase) noexcept;

struct CommitState {
  std::optional<std::filesystem::path> committed_file;
  std::optional<std::filesystem::path> staging_file;
  CommitPhase phase = CommitPhase::idle;
};

/// Points in the commit protocol at which the fault hook is invoked.
enum class FaultPoint {
  duplicate_copy,        // inside the duplication task, before copying
  after_duplicate,       // staging copy consumed, nothing modified yet
  after_layout_extend,   // staging grown for new containers
  after_region_write,    // after each extent handed to the writer (occurrence = index in file order)
  after_data_flush,      // coalescing buffer drained
  after_metadata_write,  // ChunkMeta records and FileMeta rewritten
  after_fsync,           // staging or temporary file durable
  before_rename,
  after_rename,          // new file committed, old one still present
  before_commit_hashes,  // old file removed, hash metadata not yet updated
};
std::string_view to_string(FaultPoint point) noexcept;

inline constexpr FaultPoint kCommitFaultPoints[] = {
    FaultPoint::after_duplicate,     FaultPoint::after_layout_extend,
    FaultPoint::after_region_write,  FaultPoint::after_data_flush,
    FaultPoint::after_metadata_write, FaultPoint::after_fsync,
    FaultPoint::before_rename,       FaultPoint::after_rename,
    FaultPoint::before_commit_hashes};

using FaultHook = std::function<void(FaultPoint point, std::uint64_t occurrence)>;

/// Thrown from a fault hook to emulate process death: the engine performs no
/// cleanup and refuses further use.
class SimulatedCrash : public std::exception {
 public:
  const char* what() const noexcept override { return "simulated crash"; }
};

struct DuplicationOutcome {
  bool ok = false;
  std::string error;
};

/// Completion token of a background duplication.
class DuplicationToken {
 public:
  DuplicationToken() = default;
  DuplicationToken(std::shared_future<DuplicationOutcome> future, std::filesystem::path staging,
                   std::uint64_t source_id)
      : future_(std::move(future)), staging_(std::move(staging)), source_id_(source_id) {}

  bool valid() const noexcept { return future_.valid(); }
  bool ready() const;
  /// Blocks until the copy finishes; returns its outcome.
  const DuplicationOutcome& wait() const { return future_.get(); }
  const std::filesystem::path& staging_path() const noexcept { return staging_; }
  std::uint64_t source_id() const noexcept { return source_id_; }

 private:
  std::shared_future<DuplicationOutcome> future_;
  std::filesystem::path staging_;
  std::uint64_t source_id_ = 0;
};

struct RecoveryResult {
  std::uint64_t checkpoint_id = 0;
  std::filesystem::path file;
  std::vector<DatasetExtent> datasets;
};

std::filesystem::path committed_path(const std::filesystem::path& dir, std::uint64_t id);
std::filesystem::path staging_path(const std::filesystem::path& dir, std::uint64_t id);
std::filesystem::path temporary_path(const std::filesystem::path& dir, std::uint64_t id);

/// Highest-numbered committed checkpoint file in `dir`, if any.
std::optional<std::filesystem::path> find_latest_checkpoint(const std::filesystem::path& dir);

/// Validates a checkpoint file and returns every dataset's live bytes.
std::map<DatasetId, std::vector<std::byte>> load_checkpoint(const std::filesystem::path& file);

inline constexpr std::string_view kCheckpointLogHeader =
    "id,kind,n_d,payload_bytes,meta_bytes,regions,write_s,hash_s";

/// Differential checkpoint engine for one process/rank.
///
/// A committed checkpoint is never modified in place: differential updates
/// patch a duplicate which is atomically renamed over once durable, and block
/// digests are only committed after that rename.
class CheckpointEngine {
 public:
  explicit CheckpointEngine(EngineConfig config);
  ~CheckpointEngine();
  CheckpointEngine(const CheckpointEngine&) = delete;
  CheckpointEngine& operator=(const CheckpointEngine&) = delete;

  /// Registers a dataset or resizes a registered one. New blocks become invalid.
  void protect(DatasetId id, DataRegion region, std::uint64_t size_bytes);
  void protect(DatasetId id, DataRegion region) { protect(id, region, region.bytes().size()); }

  /// Writes the next checkpoint, differential whenever a duplicate of the
  /// committed file can be obtained.
  CheckpointMeta checkpoint();
  /// Complete rewrite. With `compact`, the layout is rebuilt from scratch,
  /// reclaiming space left by shrunken datasets.
  CheckpointMeta checkpoint_full(bool compact = true);

  /// Starts copying the committed file to the next staging name. Returns the
  /// pending token if one is already outstanding.
  DuplicationToken duplicate_previous();

  /// Restores every dataset from the newest committed checkpoint in the
  /// directory. All containers are validated before any region is touched.
  RecoveryResult recover();

  CommitState commit_state() const;
  void set_fault_hook(FaultHook hook);

  const EngineConfig& config() const noexcept { return config_; }
  const DatasetDescriptor& dataset(DatasetId id) const;
  std::vector<DatasetId> dataset_ids() const;
  const std::optional<FileLayout>& layout() const noexcept { return layout_; }
  std::uint64_t last_checkpoint_id() const noexcept { return last_id_; }

 private:
  struct Protected {
    DatasetDescriptor descriptor;
    DataRegion region;
  };

  std::span<const std::byte> view(const Protected& p) const;
  std::vector<DatasetExtent> extents() const;
  void fault(FaultPoint point, std::uint64_t occurrence = 0);
  void ensure_usable() const;
  bool layout_compatible() const;
  void discard_duplicate();
  void remove_stale_files(const std::filesystem::path& keep);
  void append_log(const CheckpointMeta& meta);

  std::uint64_t next_id() const noexcept { return last_id_ + 1; }
  CheckpointMeta write_full(bool compact);
  CheckpointMeta write_differential(const std::filesystem::path& staging);
  /// Renames `scratch` into place and commits digests; returns hashing seconds.
  double finish_commit(const std::filesystem::path& scratch, FileLayout layout, bool full);
  void after_failure(const std::filesystem::path& scratch);

  EngineConfig config_;
  std::map<DatasetId, Protected> datasets_;
  std::optional<FileLayout> layout_;
  std::uint64_t last_id_ = 0;
  std::optional<std::filesystem::path> committed_;
  std::optional<DuplicationToken> pending_;
  CommitPhase phase_ = CommitPhase::idle;
  bool force_rehash_ = false;
  bool hashes_pending_ = false;  // renamed but digests not yet committed
  bool poisoned_ = false;
  mutable std::mutex hook_mutex_;
  FaultHook hook_;
};

}  // namespace dcpkt
