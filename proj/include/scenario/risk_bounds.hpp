#pragma once

#include <cstdint>
#include <vector>

namespace scenario {

/// Sample size N, observed complexity k and confidence parameter beta.
struct BoundQuery {
  std::int64_t n_scenarios = 0;
  std::int64_t complexity = 0;
  double confidence_param = 0.0;

  /// Throws std::domain_error unless 0 <= k <= N, N >= 1 and 0 < beta < 1.
  void validate() const;
};

/// Certified risk range [lower, upper] for a solution of complexity k.
///
/// root_lower_t and root_upper_t are the two nonnegative roots t_hi >= t_lo of
/// the certificate polynomial, so that lower = max{0, 1 - t_hi} and
/// upper = 1 - t_lo. For k = N the polynomial has a single root and t_lo = 0.
struct RiskInterval {
  double lower = 0.0;
  double upper = 1.0;
  BoundQuery query;
  double root_lower_t = 0.0;  // t_hi, source of the lower endpoint
  double root_upper_t = 0.0;  // t_lo, source of the upper endpoint
};

/// Closed-form envelopes around the risk interval.
struct ExplicitBoundPair {
  double upper_cap = 1.0;
  double lower_floor = 0.0;
  double lambda_used = 0.0;
  double g_value = 0.0;
};

/// ln C(n, k). Throws std::domain_error when k > n or either is negative.
double log_binomial(std::int64_t n, std::int64_t k);

/// ln(LHS) - ln(RHS) of the certificate equation written in v = 1 - t:
///
///   LHS = beta/(2N) sum_{i=k}^{N-1} C(i,k) (1-v)^{i-k}
///       + beta/(6N) sum_{i=N+1}^{4N} C(i,k) (1-v)^{i-k}
///   RHS = C(N,k) (1-v)^{N-k}
///
/// Both groups are sums of positive terms for every v <= 1, so the comparison is
/// carried out entirely with log-sum-exp. Returns +inf where RHS vanishes.
/// For k = N the same expression is the single-root equation (RHS = 1).
double certificate_log_ratio(const BoundQuery& query, double v);

/// The same log ratio in the original variable t = 1 - v >= 0.
double certificate_log_ratio_t(const BoundQuery& query, double t);

/// Sign (-1, 0, +1) of LHS - RHS above. Requires k < N and v <= 1.
int certificate_residual_sign(const BoundQuery& query, double v);

/// Both roots of the certificate equation, clamped as described on
/// RiskInterval. Pure function of the query.
RiskInterval epsilon_bounds(const BoundQuery& query);

/// epsilon_bounds for k = 0..N, sharing one log-factorial table.
std::vector<RiskInterval> epsilon_table(std::int64_t n_scenarios, double confidence_param);

/// k/N + (sqrt(k)+1)/N (lambda + ln(2/beta) + ln(k+1)) with the exact lambda;
/// dedicated expression for k = 0 and exactly 1 for k = N.
double explicit_upper_bound(const BoundQuery& query);

/// max{0, k/N - 2 g(k, N, beta)} for k >= 1, and 0 for k = 0.
double explicit_lower_bound(const BoundQuery& query);

/// Both explicit envelopes together with the constants they were built from.
ExplicitBoundPair explicit_bounds(const BoundQuery& query);

/// phi_{H,k}(v) = sum_{i=k}^{H-1} C(i,k) (1-v)^{i-k}, evaluated through the
/// binomial tail  sum_{i=k+1}^{H} C(H,i) v^i (1-v)^{H-i} / v^{k+1}  in log domain.
/// Requires 0 <= k <= H-1 and 0 < v <= 1.
double binomial_tail_phi(std::int64_t horizon, std::int64_t k, double v);

}  // namespace scenario
