#include "dcpkt/cost_model.hpp"

#include <cmath>
#include <string>

#include "dcpkt/error.hpp"

namespace dcpkt {

namespace {

void check_fraction(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1], got " + std::to_string(x));
  }
}

}  // namespace

void CostModelParams::validate() const {
  if (!(t_w > 0) || !std::isfinite(t_w)) throw ValidationError("t_w must be positive");
  if (!(t_h > 0) || !std::isfinite(t_h)) throw ValidationError("t_h must be positive");
}

void CorrectionTerms::validate() const {
  if (!(delta_t_w >= 0) || !(extra_block_write_time >= 0) || !(extra_block_hash_time >= 0)) {
    throw ValidationError("correction terms must be non-negative");
  }
}

double tau(const CostModelParams& p, double n_d) {
  p.validate();
  check_fraction(n_d, "n_d");
  return (p.t_h - p.t_w) + n_d * (p.t_w + p.t_h);
}

double eta(const CostModelParams& p) {
  p.validate();
  return (p.t_w - p.t_h) / (p.t_w + p.t_h);
}

double speedup(const CostModelParams& p, double n_d) {
  p.validate();
  check_fraction(n_d, "n_d");
  const double rho = p.rho();
  return rho - 1.0 + n_d * (rho + 1.0);
}

double corrected_tau(const CostModelParams& p, const CorrectionTerms& c, double n_d,
                     double n_d_prime) {
  c.validate();
  check_fraction(n_d_prime, "n_d'");
  const double base = tau(p, n_d);
  if (c.delta_t_w == 0 && c.extra_block_write_time == 0 && c.extra_block_hash_time == 0) {
    return base;
  }
  return base - n_d * c.delta_t_w +
         n_d_prime * (c.extra_block_write_time + c.extra_block_hash_time);
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::speedup: return "SPEEDUP";
    case Verdict::overhead: return "OVERHEAD";
    case Verdict::at_threshold: return "AT-THRESHOLD";
  }
  return "?";
}

Verdict verdict(const CostModelParams& p, double n_d, double rel_tol) {
  const double t = tau(p, n_d);
  if (std::abs(t) <= rel_tol * (p.t_w + p.t_h)) return Verdict::at_threshold;
  return t < 0 ? Verdict::speedup : Verdict::overhead;
}

}  // namespace dcpkt
