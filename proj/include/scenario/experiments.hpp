#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenario/sv_models.hpp"

namespace scenario {

/// Counter-based generator: output j of stream s is a fixed function of
/// (seed, s, j), so per-trial streams are independent of scheduling. The
/// uniform and Laplace conversions are spelled out to keep samples identical
/// across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Laplace(0, scale) by inverting the CDF.
  double laplace(double scale);

  /// Seed of an independent stream derived from (seed, stream).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t state_;
};

struct SincConfig {
  std::int64_t n_train = 2000;
  double input_lo = -3.0;
  double input_hi = 3.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

double sinc(double m);

/// Inputs uniform on [input_lo, input_hi], outputs sinc(m) + Laplace noise.
Dataset gen_sinc(const SincConfig& config);

struct CostRiskRow {
  double rho = 0.0;
  double cost = 0.0;
  double tube = 0.0;
  std::int64_t complexity = 0;
  double eps_lower = 0.0;
  double eps_upper = 1.0;
  std::optional<std::string> error;  // set when the fit failed; other fields unset
};

/// One SVR fit per rho; consecutive fits are warm-started from the previous
/// solver iterate. A failed row carries its message and the sweep continues.
std::vector<CostRiskRow> rho_sweep(const Dataset& data, std::span<const double> rhos, double tau,
                                   const KernelSpec& kernel, double beta, const FitOptions& options = {});

/// Fraction of test points with a strictly violated constraint.
double empirical_risk(const SvrModel& model, const Dataset& test);
double empirical_risk(const SvddModel& model, const Dataset& test);
double empirical_risk(const SvmModel& model, const Dataset& test);

struct TrialResult {
  std::int64_t trial = 0;
  std::int64_t complexity = 0;
  double empirical_risk = 0.0;
  double eps_lower = 0.0;
  double eps_upper = 1.0;
  bool covered = false;
};

struct ValidationReport {
  std::vector<TrialResult> trials;  // ordered by trial index
  std::int64_t coverage_count = 0;
  std::int64_t n_trials = 0;
};

struct ValidationSettings {
  double rho = 0.0;
  double tau = 0.01;
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  double beta = 1e-4;
  std::int64_t n_trials = 200;
  std::int64_t n_test = 10000;
  int threads = 1;  // <= 0 selects the hardware concurrency
  FitOptions fit;
};

/// Fresh training and test sets per trial, streams derived from config.seed.
ValidationReport monte_carlo_validation(const SincConfig& config, const ValidationSettings& settings);

}  // namespace scenario
