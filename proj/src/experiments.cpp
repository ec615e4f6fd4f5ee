#include "scenario/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace scenario {

double SplitMix64::laplace(double scale) {
  const double u = uniform() - 0.5;
  return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
}

std::uint64_t SplitMix64::derive(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed ^ (0x6a09e667f3bcc909ULL * (stream + 1)));
  mix.next();
  return mix.next();
}

void SincConfig::validate() const {
  if (n_train < 1) throw std::invalid_argument("n_train must be at least 1");
  if (!(noise_scale > 0.0)) throw std::invalid_argument("noise_scale must be positive");
  if (!(input_lo < input_hi)) throw std::invalid_argument("input range is empty");
}

double sinc(double m) {
  if (m == 0.0) return 1.0;
  const double x = std::numbers::pi * m;
  return std::sin(x) / x;
}

Dataset gen_sinc(const SincConfig& config) {
  config.validate();
  SplitMix64 gen(config.seed);
  Dataset d;
  d.inputs.resize(config.n_train, 1);
  d.outputs.resize(config.n_train);
  for (Index i = 0; i < config.n_train; ++i) {
    const double m = gen.uniform(config.input_lo, config.input_hi);
    d.inputs(i, 0) = m;
    d.outputs[i] = sinc(m) + gen.laplace(config.noise_scale);
  }
  return d;
}

std::vector<CostRiskRow> rho_sweep(const Dataset& data, std::span<const double> rhos, double tau,
                                   const KernelSpec& kernel, double beta, const FitOptions& options) {
  if (rhos.empty()) throw std::invalid_argument("rho_sweep: no rho values");
  std::vector<CostRiskRow> rows;
  FitOptions opts = options;
  VecX warm;
  for (double rho : rhos) {
    CostRiskRow row;
    row.rho = rho;
    try {
      const auto model = fit_svr(data, tau, rho, kernel, opts);
      const auto cert = certify(CertificateKind::svr, svr_complexity(model, data), data.size(), beta);
      row.cost = model.cost();
      row.tube = model.tube;
      row.complexity = cert.complexity;
      row.eps_lower = cert.interval.lower;
      row.eps_upper = cert.interval.upper;
      warm = model.diagnostics.solver_primal;
      opts.warm_start = &warm;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

double violation_fraction(const VecX& f) {
  if (f.size() == 0) throw std::invalid_argument("empirical_risk: empty test set");
  return static_cast<double>((f.array() > 0.0).count()) / static_cast<double>(f.size());
}

}  // namespace

double empirical_risk(const SvrModel& model, const Dataset& test) {
  return violation_fraction(svr_constraint_values(model, test));
}

double empirical_risk(const SvddModel& model, const Dataset& test) {
  return violation_fraction(svdd_constraint_values(model, test));
}

double empirical_risk(const SvmModel& model, const Dataset& test) {
  return violation_fraction(svm_constraint_values(model, test));
}

ValidationReport monte_carlo_validation(const SincConfig& config, const ValidationSettings& settings) {
  config.validate();
  if (settings.n_trials < 1 || settings.n_test < 1) {
    throw std::invalid_argument("validation needs at least one trial and one test point");
  }
  ValidationReport report;
  report.n_trials = settings.n_trials;
  report.trials.resize(static_cast<std::size_t>(settings.n_trials));

  auto run_trial = [&](std::int64_t t) {
    SincConfig train = config;
    train.seed = SplitMix64::derive(config.seed, 2 * static_cast<std::uint64_t>(t));
    SincConfig test = config;
    test.n_train = settings.n_test;
    test.seed = SplitMix64::derive(config.seed, 2 * static_cast<std::uint64_t>(t) + 1);
    const Dataset data = gen_sinc(train);
    const auto model = fit_svr(data, settings.tau, settings.rho, settings.kernel, settings.fit);
    const auto cert = certify(CertificateKind::svr, svr_complexity(model, data), data.size(), settings.beta);
    TrialResult r;
    r.trial = t;
    r.complexity = cert.complexity;
    r.empirical_risk = empirical_risk(model, gen_sinc(test));
    r.eps_lower = cert.interval.lower;
    r.eps_upper = cert.interval.upper;
    r.covered = r.eps_lower <= r.empirical_risk && r.empirical_risk <= r.eps_upper;
    report.trials[static_cast<std::size_t>(t)] = r;
  };

  int threads = settings.threads > 0 ? settings.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = static_cast<int>(std::clamp<std::int64_t>(threads, 1, settings.n_trials));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::int64_t t = next++; t < settings.n_trials; t = next++) {
      try {
        run_trial(t);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = settings.n_trials;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& r : report.trials) report.coverage_count += r.covered;
  return report;
}

}  // namespace scenario
