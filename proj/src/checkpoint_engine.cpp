#include "dcpkt/checkpoint_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dcpkt {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Parses "ckpt.<id>.<suffix>" and returns the id when the suffix matches.
std::optional<std::uint64_t> parse_name(const std::string& name, std::string_view suffix) {
  constexpr std::string_view prefix = "ckpt.";
  if (name.size() <= prefix.size() + suffix.size() + 1) return std::nullopt;
  if (name.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) return std::nullopt;
  const std::size_t dot = name.size() - suffix.size() - 1;
  if (name[dot] != '.') return std::nullopt;
  std::uint64_t id = 0;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + dot;
  auto [ptr, ec] = std::from_chars(first, last, id);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return id;
}

void remove_quietly(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

}  // namespace

void DataRegion::fit(std::size_t n) const {
  if (resize_fn_) {
    resize_fn_(target_, n);
    return;
  }
  if (n > fixed_.size()) {
    throw ValidationError("fixed region of " + std::to_string(fixed_.size()) +
                          " bytes cannot hold " + std::to_string(n));
  }
}

void EngineConfig::validate() const {
  if (block_size == 0) throw ValidationError("block size must be positive");
  if (checkpoint_directory.empty()) throw ValidationError("checkpoint directory is empty");
  if (coalescing_threshold_bytes < block_size) {
    throw ValidationError("coalescing threshold must be at least one block");
  }
  if (emulated_write_latency.count() < 0) throw ValidationError("negative write latency");
}

std::string_view to_string(CheckpointKind kind) noexcept {
  return kind == CheckpointKind::full ? "FULL" : "DIFFERENTIAL";
}

std::string_view to_string(CommitPhase phase) noexcept {
  switch (phase) {
    case CommitPhase::idle: return "IDLE";
    case CommitPhase::duplicating: return "DUPLICATING";
    case CommitPhase::updating: return "UPDATING";
    case CommitPhase::committing: return "COMMITTING";
  }
  return "?";
}

std::string_view to_string(FaultPoint point) noexcept {
  switch (point) {
    case FaultPoint::duplicate_copy: return "duplicate_copy";
    case FaultPoint::after_duplicate: return "after_duplicate";
    case FaultPoint::after_layout_extend: return "after_layout_extend";
    case FaultPoint::after_region_write: return "after_region_write";
    case FaultPoint::after_data_flush: return "after_data_flush";
    case FaultPoint::after_metadata_write: return "after_metadata_write";
    case FaultPoint::after_fsync: return "after_fsync";
    case FaultPoint::before_rename: return "before_rename";
    case FaultPoint::after_rename: return "after_rename";
    case FaultPoint::before_commit_hashes: return "before_commit_hashes";
  }
  return "?";
}

bool DuplicationToken::ready() const {
  return future_.valid() &&
         future_.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
}

fs::path committed_path(const fs::path& dir, std::uint64_t id) {
  return dir / ("ckpt." + std::to_string(id) + ".dcpkt");
}
fs::path staging_path(const fs::path& dir, std::uint64_t id) {
  return dir / ("ckpt." + std::to_string(id) + ".staging");
}
fs::path temporary_path(const fs::path& dir, std::uint64_t id) {
  return dir / ("ckpt." + std::to_string(id) + ".tmp");
}

std::optional<fs::path> find_latest_checkpoint(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return std::nullopt;
  std::optional<std::uint64_t> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto id = parse_name(entry.path().filename().string(), "dcpkt");
    if (id && (!best || *id > *best)) best = id;
  }
  if (!best) return std::nullopt;
  return committed_path(dir, *best);
}

std::map<DatasetId, std::vector<std::byte>> load_checkpoint(const fs::path& file) {
  File f(file, File::Mode::read);
  const FileLayout layout = read_layout(f);
  std::map<DatasetId, std::vector<std::byte>> out;
  for (const auto& d : layout.meta.datasets) out[d.id] = read_dataset(f, layout, d.id);
  return out;
}

CheckpointEngine::CheckpointEngine(EngineConfig config) : config_(std::move(config)) {
  config_.validate();
  fs::create_directories(config_.checkpoint_directory);
  // Continue numbering after anything already on disk so a fresh engine never
  // reuses the name of a stale file.
  for (const auto& entry : fs::directory_iterator(config_.checkpoint_directory)) {
    const std::string name = entry.path().filename().string();
    for (std::string_view suffix : {"dcpkt", "staging", "tmp"}) {
      if (auto id = parse_name(name, suffix)) last_id_ = std::max(last_id_, *id);
    }
  }
}

CheckpointEngine::~CheckpointEngine() {
  if (pending_ && pending_->valid()) pending_->wait();
}

void CheckpointEngine::ensure_usable() const {
  if (poisoned_) throw StateError("engine crashed; construct a new one and recover");
  if (phase_ == CommitPhase::updating || phase_ == CommitPhase::committing) {
    throw StateError("a checkpoint is already in progress");
  }
}

void CheckpointEngine::fault(FaultPoint point, std::uint64_t occurrence) {
  FaultHook hook;
  {
    std::lock_guard lock(hook_mutex_);
    hook = hook_;
  }
  if (hook) hook(point, occurrence);
}

void CheckpointEngine::set_fault_hook(FaultHook hook) {
  std::lock_guard lock(hook_mutex_);
  hook_ = std::move(hook);
}

void CheckpointEngine::protect(DatasetId id, DataRegion region, std::uint64_t size_bytes) {
  ensure_usable();
  if (size_bytes > region.bytes().size()) {
    throw ValidationError("dataset " + std::to_string(id) + " size " + std::to_string(size_bytes) +
                          " exceeds its region of " + std::to_string(region.bytes().size()) +
                          " bytes");
  }
  auto it = datasets_.find(id);
  if (it == datasets_.end()) {
    Protected p{make_dataset(id, config_.block_size, config_.algorithm), region};
    register_blocks(p.descriptor, size_bytes);
    datasets_.emplace(id, std::move(p));
    return;
  }
  Protected& p = it->second;
  if (p.region.identity() != region.identity()) {
    throw ValidationError("dataset " + std::to_string(id) + " is already bound to another region");
  }
  p.region = region;
  register_blocks(p.descriptor, size_bytes);
}

const DatasetDescriptor& CheckpointEngine::dataset(DatasetId id) const {
  auto it = datasets_.find(id);
  if (it == datasets_.end()) throw ValidationError("dataset " + std::to_string(id) + " is not protected");
  return it->second.descriptor;
}

std::vector<DatasetId> CheckpointEngine::dataset_ids() const {
  std::vector<DatasetId> ids;
  for (const auto& [id, p] : datasets_) ids.push_back(id);
  return ids;
}

std::span<const std::byte> CheckpointEngine::view(const Protected& p) const {
  return p.region.bytes().first(static_cast<std::size_t>(p.descriptor.size_bytes));
}

std::vector<DatasetExtent> CheckpointEngine::extents() const {
  std::vector<DatasetExtent> out;
  for (const auto& [id, p] : datasets_) out.push_back({id, p.descriptor.size_bytes});
  return out;
}

bool CheckpointEngine::layout_compatible() const {
  if (!layout_) return false;
  if (layout_->meta.block_size != config_.block_size) return false;
  if (layout_->meta.algorithm != config_.algorithm) return false;
  if (layout_->meta.datasets.size() != datasets_.size()) return false;
  for (const auto& d : layout_->meta.datasets) {
    if (!datasets_.contains(d.id)) return false;
  }
  return true;
}

CommitState CheckpointEngine::commit_state() const {
  CommitState s;
  s.committed_file = committed_;
  s.phase = phase_;
  if (pending_) {
    s.staging_file = pending_->staging_path();
    if (phase_ == CommitPhase::idle && !pending_->ready()) s.phase = CommitPhase::duplicating;
  }
  return s;
}

DuplicationToken CheckpointEngine::duplicate_previous() {
  ensure_usable();
  if (!committed_) throw StateError("no committed checkpoint to duplicate");
  if (pending_ && pending_->source_id() == last_id_) return *pending_;
  discard_duplicate();

  const fs::path source = *committed_;
  const fs::path staging = staging_path(config_.checkpoint_directory, next_id());
  auto future = std::async(std::launch::async, [this, source, staging]() {
                  DuplicationOutcome outcome;
                  try {
                    fault(FaultPoint::duplicate_copy, 0);
                    copy_file_contents(source, staging);
                    outcome.ok = true;
                  } catch (const std::exception& e) {
                    remove_quietly(staging);
                    outcome.error = e.what();
                  }
                  return outcome;
                }).share();
  pending_ = DuplicationToken(std::move(future), staging, last_id_);
  return *pending_;
}

void CheckpointEngine::discard_duplicate() {
  if (!pending_) return;
  pending_->wait();
  remove_quietly(pending_->staging_path());
  pending_.reset();
}

void CheckpointEngine::remove_stale_files(const fs::path& keep) {
  for (const auto& entry : fs::directory_iterator(config_.checkpoint_directory)) {
    const fs::path& p = entry.path();
    if (p == keep) continue;
    const std::string name = p.filename().string();
    for (std::string_view suffix : {"dcpkt", "staging", "tmp"}) {
      if (parse_name(name, suffix)) {
        remove_quietly(p);
        break;
      }
    }
  }
}

void CheckpointEngine::append_log(const CheckpointMeta& meta) {
  if (!config_.write_log) return;
  const fs::path path = config_.checkpoint_directory / "ckpt_log.csv";
  std::error_code ec;
  const bool fresh = !fs::exists(path, ec) || fs::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string(), errno);
  if (fresh) out << kCheckpointLogHeader << '\n';
  out << meta.checkpoint_id << ',' << to_string(meta.kind) << ',' << std::setprecision(6)
      << meta.n_d << ',' << meta.bytes_written_payload << ',' << meta.bytes_written_metadata << ','
      << meta.region_count << ',' << meta.wall_time_write << ',' << meta.wall_time_hash << '\n';
}

void CheckpointEngine::after_failure(const fs::path& scratch) {
  phase_ = CommitPhase::idle;
  if (hashes_pending_) {
    // The new file is committed but the digests were not updated to match it.
    force_rehash_ = true;
    hashes_pending_ = false;
  } else {
    remove_quietly(scratch);
  }
}

CheckpointMeta CheckpointEngine::checkpoint() {
  ensure_usable();
  if (!config_.dcp_enabled || !committed_ || force_rehash_ || !layout_compatible()) {
    return checkpoint_full(false);
  }
  if (!pending_ || pending_->source_id() != last_id_) duplicate_previous();
  const DuplicationToken token = *pending_;
  const DuplicationOutcome outcome = token.wait();
  pending_.reset();
  if (!outcome.ok) {
    remove_quietly(token.staging_path());
    return checkpoint_full(false);
  }
  try {
    return write_differential(token.staging_path());
  } catch (const SimulatedCrash&) {
    poisoned_ = true;
    throw;
  } catch (...) {
    after_failure(token.staging_path());
    throw;
  }
}

CheckpointMeta CheckpointEngine::checkpoint_full(bool compact) {
  ensure_usable();
  discard_duplicate();
  const fs::path scratch = temporary_path(config_.checkpoint_directory, next_id());
  try {
    return write_full(compact);
  } catch (const SimulatedCrash&) {
    poisoned_ = true;
    throw;
  } catch (...) {
    after_failure(scratch);
    throw;
  }
}

CheckpointMeta CheckpointEngine::write_full(bool compact) {
  const std::uint64_t id = next_id();
  const fs::path scratch = temporary_path(config_.checkpoint_directory, id);
  const auto ex = extents();

  bool reuse = !compact && layout_ && layout_->meta.block_size == config_.block_size;
  if (reuse) {
    for (const auto& d : layout_->meta.datasets) reuse = reuse && datasets_.contains(d.id);
  }
  const FileLayout planned = plan_layout(reuse ? layout_ : std::nullopt, ex,
                                         {config_.block_size, config_.algorithm, id});

  CheckpointMeta meta;
  meta.checkpoint_id = id;
  meta.kind = CheckpointKind::full;
  meta.n_d = 1.0;

  phase_ = CommitPhase::updating;
  const auto t0 = Clock::now();
  File file(scratch, File::Mode::create_truncate);
  const PayloadSource source = [this](DatasetId ds, std::uint64_t off, std::span<std::byte> out) {
    const auto data = view(datasets_.at(ds));
    std::memcpy(out.data(), data.data() + off, out.size());
  };
  FileLayout layout = write_layout(file, planned, source);
  fault(FaultPoint::after_data_flush);
  fault(FaultPoint::after_metadata_write);
  file.sync();
  fault(FaultPoint::after_fsync);
  file.close();
  meta.wall_time_write = seconds_since(t0);

  for (const auto& [ds, p] : datasets_) {
    meta.per_dataset.push_back({ds, p.descriptor.block_count(), p.descriptor.block_count(),
                                layout.containers_of(ds).size()});
    meta.bytes_written_payload += p.descriptor.size_bytes;
    meta.total_blocks += p.descriptor.block_count();
    meta.protected_bytes += p.descriptor.size_bytes;
    if (p.descriptor.size_bytes > 0) {
      ++meta.region_count;
      meta.write_stats.region_sizes.push_back(p.descriptor.size_bytes);
    }
  }
  meta.dirty_blocks = meta.total_blocks;
  meta.bytes_written_metadata = layout.header_size() + kChunkMetaSize * layout.entries.size();
  meta.write_stats.payload_bytes = meta.bytes_written_payload;
  meta.write_stats.bytes_written = layout.file_size();

  phase_ = CommitPhase::committing;
  fault(FaultPoint::before_rename);
  meta.wall_time_hash = finish_commit(scratch, std::move(layout), true);
  append_log(meta);
  return meta;
}

CheckpointMeta CheckpointEngine::write_differential(const fs::path& staging) {
  const std::uint64_t id = next_id();
  fault(FaultPoint::after_duplicate);

  FileLayout layout = plan_layout(layout_, extents(), {config_.block_size, config_.algorithm, id});
  const FileLayout& previous = *layout_;

  CheckpointMeta meta;
  meta.checkpoint_id = id;
  meta.kind = CheckpointKind::differential;
  double write_s = 0;
  double hash_s = 0;

  phase_ = CommitPhase::updating;
  File file(staging, File::Mode::read_write);
  if (file.size() != previous.file_size()) {
    throw CorruptionError("staging copy " + staging.string() + " has unexpected size");
  }
  if (layout.file_size() > previous.file_size()) file.truncate(layout.file_size());
  fault(FaultPoint::after_layout_extend);

  CoalescingOptions opts;
  opts.enabled = config_.coalescing_enabled;
  opts.threshold_bytes = config_.coalescing_threshold_bytes;
  opts.max_gap_bytes = config_.coalescing_max_gap_bytes;
  opts.write_latency = config_.emulated_write_latency;
  CoalescingWriter writer(file, opts);

  // Tail containers put extents out of dataset order; the writer needs file order.
  struct PendingWrite {
    std::uint64_t file_offset;
    std::span<const std::byte> bytes;
    std::size_t entry;
  };
  std::vector<PendingWrite> pending;
  for (auto& [ds_id, p] : datasets_) {
    DatasetDescriptor& ds = p.descriptor;
    const auto data = view(p);
    meta.total_blocks += ds.block_count();
    meta.protected_bytes += ds.size_bytes;
    const std::vector<std::size_t> containers = layout.containers_of(ds_id);
    DatasetCheckpointStats& stats =
        meta.per_dataset.emplace_back(DatasetCheckpointStats{ds_id, 0, ds.block_count(), containers.size()});
    std::size_t cursor = 0;
    while (true) {
      const auto t = Clock::now();
      const auto scan = next_dirty_region(ds, data, cursor);
      hash_s += seconds_since(t);
      if (!scan) break;
      const DirtyRegion& r = scan->region;
      const std::uint64_t run = scan->next_cursor - r.offset_bytes / ds.block_size;
      meta.dirty_blocks += run;
      stats.dirty_blocks += run;
      ++meta.region_count;

      std::uint64_t consumed = 0;
      for (const PhysicalExtent& ext : logical_to_physical(layout, ds_id, r.offset_bytes, r.length_bytes)) {
        std::size_t entry = containers.front();
        for (std::size_t idx : containers) {
          const VirtualContainer& c = layout.entries[idx].container;
          if (ext.file_offset >= c.file_offset && ext.file_offset < c.file_offset + c.container_size) {
            entry = idx;
          }
        }
        pending.push_back({ext.file_offset,
                           data.subspan(static_cast<std::size_t>(r.offset_bytes + consumed),
                                        static_cast<std::size_t>(ext.length)),
                           entry});
        consumed += ext.length;
      }
      cursor = scan->next_cursor;
    }
  }
  std::sort(pending.begin(), pending.end(),
            [](const PendingWrite& a, const PendingWrite& b) { return a.file_offset < b.file_offset; });

  std::vector<bool> touched(layout.entries.size(), false);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto t = Clock::now();
    writer.write(pending[i].file_offset, pending[i].bytes);
    touched[pending[i].entry] = true;
    write_s += seconds_since(t);
    fault(FaultPoint::after_region_write, i);
  }

  auto t = Clock::now();
  writer.flush();
  write_s += seconds_since(t);
  fault(FaultPoint::after_data_flush);

  // Payload checksums come from memory; untouched containers keep theirs.
  t = Clock::now();
  const PayloadSource source = [this](DatasetId ds, std::uint64_t off, std::span<std::byte> out) {
    const auto data = view(datasets_.at(ds));
    std::memcpy(out.data(), data.data() + off, out.size());
  };
  for (std::size_t i = 0; i < layout.entries.size(); ++i) {
    ChunkMeta& chunk = layout.entries[i].chunk;
    const bool is_new = i >= previous.entries.size();
    const bool resized = !is_new && previous.entries[i].chunk.chunk_size != chunk.chunk_size;
    if (is_new || resized || touched[i]) {
      chunk.payload_checksum = compute_payload_checksum(layout.meta.algorithm, source, chunk.dataset_id,
                                                        layout.logical_start(i), chunk.chunk_size);
    }
  }
  hash_s += seconds_since(t);

  t = Clock::now();
  for (std::size_t i = 0; i < layout.entries.size(); ++i) {
    const LayoutEntry& e = layout.entries[i];
    const bool is_new = i >= previous.entries.size();
    if (!is_new && previous.entries[i].chunk == e.chunk) continue;
    file.pwrite_all(encode_chunk_meta(e.chunk), e.container.file_offset - kChunkMetaSize);
    meta.bytes_written_metadata += kChunkMetaSize;
  }
  const std::vector<std::byte> header = encode_file_meta(layout);
  file.pwrite_all(header, 0);
  meta.bytes_written_metadata += header.size();
  layout.meta.meta_checksum = compute_meta_checksum(layout);
  fault(FaultPoint::after_metadata_write);

  file.sync();
  fault(FaultPoint::after_fsync);
  file.close();
  write_s += seconds_since(t);

  meta.write_stats = writer.stats();
  meta.bytes_written_payload = meta.write_stats.payload_bytes;
  meta.n_d = meta.total_blocks == 0 ? 0.0
                                    : static_cast<double>(meta.dirty_blocks) /
                                          static_cast<double>(meta.total_blocks);
  meta.wall_time_write = write_s;

  phase_ = CommitPhase::committing;
  fault(FaultPoint::before_rename);
  meta.wall_time_hash = hash_s + finish_commit(staging, std::move(layout), false);
  append_log(meta);
  return meta;
}

double CheckpointEngine::finish_commit(const fs::path& scratch, FileLayout layout, bool full) {
  const std::uint64_t id = layout.meta.checkpoint_id;
  const fs::path target = committed_path(config_.checkpoint_directory, id);
  atomic_rename(scratch, target);
  sync_directory(config_.checkpoint_directory);

  hashes_pending_ = true;
  const std::optional<fs::path> old = committed_;
  committed_ = target;
  layout_ = std::move(layout);
  last_id_ = id;
  fault(FaultPoint::after_rename);

  if (old && *old != target) remove_quietly(*old);
  fault(FaultPoint::before_commit_hashes);

  const auto t0 = Clock::now();
  for (auto& [ds_id, p] : datasets_) {
    DatasetDescriptor& ds = p.descriptor;
    if (!config_.dcp_enabled) {
      ds.committed_size_bytes = ds.size_bytes;
      continue;
    }
    if (full || force_rehash_) invalidate_all(ds);
    commit_hashes(ds, view(p));
  }
  const double hash_s = seconds_since(t0);
  force_rehash_ = false;
  hashes_pending_ = false;
  phase_ = CommitPhase::idle;

  remove_stale_files(target);
  if (config_.dcp_enabled && config_.async_duplicate) duplicate_previous();
  return hash_s;
}

RecoveryResult CheckpointEngine::recover() {
  ensure_usable();
  discard_duplicate();
  const auto latest = find_latest_checkpoint(config_.checkpoint_directory);
  if (!latest) {
    throw StateError("no committed checkpoint in " + config_.checkpoint_directory.string());
  }
  File file(*latest, File::Mode::read);
  FileLayout layout = read_layout(file);

  std::map<DatasetId, std::vector<std::byte>> contents;
  for (const auto& d : layout.meta.datasets) {
    auto it = datasets_.find(d.id);
    if (it == datasets_.end()) {
      throw StateError("checkpoint holds dataset " + std::to_string(d.id) +
                       " which is not protected");
    }
    if (!it->second.region.resizable() && d.size > it->second.region.bytes().size()) {
      throw ValidationError("fixed region of dataset " + std::to_string(d.id) +
                            " cannot hold its " + std::to_string(d.size) + " committed bytes");
    }
    contents[d.id] = read_dataset(file, layout, d.id);
  }
  file.close();

  RecoveryResult result;
  result.checkpoint_id = layout.meta.checkpoint_id;
  result.file = *latest;
  result.datasets = layout.meta.datasets;

  for (auto& [ds_id, bytes] : contents) {
    Protected& p = datasets_.at(ds_id);
    p.region.fit(bytes.size());
    std::memcpy(p.region.bytes().data(), bytes.data(), bytes.size());
    DatasetDescriptor fresh = make_dataset(ds_id, config_.block_size, config_.algorithm);
    register_blocks(fresh, bytes.size());
    p.descriptor = std::move(fresh);
    if (config_.dcp_enabled) {
      commit_hashes(p.descriptor, view(p));
    } else {
      p.descriptor.committed_size_bytes = p.descriptor.size_bytes;
    }
  }

  committed_ = *latest;
  layout_ = std::move(layout);
  last_id_ = result.checkpoint_id;
  force_rehash_ = false;
  remove_stale_files(*latest);
  if (config_.dcp_enabled && config_.async_duplicate) duplicate_previous();
  return result;
}

}  // namespace dcpkt
