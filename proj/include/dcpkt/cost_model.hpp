#pragma once

#include <cstdint>
#include <string_view>

namespace dcpkt {

/// Per-block timings. tau and everything derived from it is in seconds per block.
struct CostModelParams {
  std::uint64_t b = 0;  // block size in bytes; informational
  double t_w = 0;       // seconds to write one block
  double t_h = 0;       // seconds to hash one block

  double rho() const noexcept { return t_h / t_w; }
  void validate() const;
};

/// Measured corrections to the plain model. All terms are non-negative.
struct CorrectionTerms {
  double delta_t_w = 0;               // per-block write time saved at reduced load
  double extra_block_write_time = 0;  // mean write time of a boundary block
  double extra_block_hash_time = 0;   // mean hash time of a boundary block

  void validate() const;
};

/// (t_h - t_w) + n_d (t_w + t_h). Negative means differential checkpointing wins.
double tau(const CostModelParams& p, double n_d);

/// Dirty fraction at which tau vanishes: (t_w - t_h) / (t_w + t_h).
double eta(const CostModelParams& p);

/// tau / t_w = rho - 1 + n_d (rho + 1).
double speedup(const CostModelParams& p, double n_d);

/// tau - n_d delta_t_w + n_d' (extra write + extra hash).
double corrected_tau(const CostModelParams& p, const CorrectionTerms& c, double n_d,
                     double n_d_prime);

enum class Verdict { speedup, overhead, at_threshold };
std::string_view to_string(Verdict v) noexcept;

/// Classifies tau with a tolerance relative to t_w + t_h.
Verdict verdict(const CostModelParams& p, double n_d, double rel_tol = 1e-12);

}  // namespace dcpkt
