#include "scenario/risk_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "scenario/types.hpp"

namespace scenario {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxBisectionSteps = 200;  // root refinement cap
constexpr int kMaxScanSteps = 200;
constexpr int kFallbackGridSize = 4096;
constexpr double kCap = 1e6;  // |log ratio| beyond this only matters by sign

double log_sum_exp(const ArrX& terms) {
  if (terms.size() == 0) return -kInf;
  const double peak = terms.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  return peak + std::log((terms - peak).exp().sum());
}

// Log-sum-exp of a unimodal sequence: only the terms within kWindow of the peak
// are exponentiated, the rest are below double resolution of the sum.
double unimodal_log_sum_exp(const ArrX& terms) {
  constexpr double kWindow = 42.0;
  if (terms.size() == 0) return -kInf;
  Index top = 0;
  const double peak = terms.maxCoeff(&top);
  if (!std::isfinite(peak)) return peak;
  const double floor = peak - kWindow;
  const double* data = terms.data();
  const double* first = std::partition_point(data, data + top, [floor](double x) { return x < floor; });
  const double* last =
      std::partition_point(data + top, data + terms.size(), [floor](double x) { return x >= floor; });
  const Index begin = first - data;
  const Index count = last - first;
  return peak + std::log((terms.segment(begin, count) - peak).exp().sum());
}

// ln j! for j = 0..size-1.
ArrX log_factorials(Index size) {
  ArrX table(size);
  for (Index j = 0; j < size; ++j) table[j] = std::lgamma(static_cast<double>(j) + 1.0);
  return table;
}

// The certificate equation for one (N, k, beta), with every coefficient kept as a
// logarithm. Terms with exponent 0 are tracked separately so that t = 0 (v = 1)
// evaluates exactly.
class CertificatePolynomial {
 public:
  CertificatePolynomial(const BoundQuery& query, const ArrX& log_fact) {
    const Index n = query.n_scenarios;
    const Index k = query.complexity;
    const double beta = query.confidence_param;
    const double low_weight = std::log(beta / (2.0 * static_cast<double>(n)));
    const double high_weight = std::log(beta / (6.0 * static_cast<double>(n)));

    const Index n_low = n - k;  // i = k..N-1
    const Index n_high = 3 * n;  // i = N+1..4N
    low_log_coeff_.resize(n_low);
    low_exponent_.resize(n_low);
    for (Index j = 0; j < n_low; ++j) {
      const Index i = k + j;
      low_log_coeff_[j] = low_weight + log_fact[i] - log_fact[k] - log_fact[i - k];
      low_exponent_[j] = static_cast<double>(i - k);
    }
    high_log_coeff_.resize(n_high);
    high_exponent_.resize(n_high);
    for (Index j = 0; j < n_high; ++j) {
      const Index i = n + 1 + j;
      high_log_coeff_[j] = high_weight + log_fact[i] - log_fact[k] - log_fact[i - k];
      high_exponent_[j] = static_cast<double>(i - k);
    }
    // i = k lives in the low group when k < N; it is the only t^0 term.
    lhs_constant_ = k < n ? low_log_coeff_[0] : -kInf;
    rhs_log_coeff_ = log_fact[n] - log_fact[k] - log_fact[n - k];
    rhs_exponent_ = static_cast<double>(n - k);
  }

  // ln LHS - ln RHS at t >= 0 (t = 1 - v). Working in t keeps full relative
  // precision for roots close to t = 0.
  double log_ratio(double t) const {
    if (t == 0.0) {
      const double rhs = rhs_exponent_ == 0.0 ? rhs_log_coeff_ : -kInf;
      if (rhs == -kInf) return lhs_constant_ == -kInf ? 0.0 : kInf;
      return lhs_constant_ - rhs;
    }
    const double log_t = std::log(t);
    // Each group is log-concave in i, hence unimodal.
    const double low = unimodal_log_sum_exp(low_log_coeff_ + low_exponent_ * log_t);
    const double high = unimodal_log_sum_exp(high_log_coeff_ + high_exponent_ * log_t);
    const double lhs = std::max(low, high) + std::log1p(std::exp(-std::abs(low - high)));
    const double rhs = rhs_log_coeff_ + rhs_exponent_ * log_t;
    return lhs - rhs;
  }

  bool positive(double t) const { return log_ratio(t) > 0.0; }

 private:
  ArrX low_log_coeff_;
  ArrX low_exponent_;
  ArrX high_log_coeff_;
  ArrX high_exponent_;
  double lhs_constant_ = -kInf;
  double rhs_log_coeff_ = 0.0;
  double rhs_exponent_ = 0.0;
};

// Root of the log ratio on a bracket whose ends carry opposite signs. TOMS 748
// keeps the bracket at every step, so this is a safeguarded bisection with
// superlinear convergence on the smooth log ratio.
double bracketed_root(const CertificatePolynomial& poly, double a, double b) {
  double fa = poly.log_ratio(a);
  double fb = poly.log_ratio(b);
  if (a > b) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  // Ends where the ratio is infinite (t = 0) are pulled in to a finite value.
  fa = std::clamp(fa, -kCap, kCap);
  fb = std::clamp(fb, -kCap, kCap);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  const auto f = [&poly](double t) { return std::clamp(poly.log_ratio(t), -kCap, kCap); };
  std::uintmax_t max_iter = kMaxBisectionSteps;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(52), max_iter);
  if (max_iter >= static_cast<std::uintmax_t>(kMaxBisectionSteps)) {
    throw std::logic_error("epsilon_bounds: root refinement did not converge");
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

// A point t strictly between the two roots, where LHS < RHS.
double interior_point(const CertificatePolynomial& poly, const BoundQuery& query) {
  const double n = static_cast<double>(query.n_scenarios);
  const double start = static_cast<double>(query.n_scenarios - query.complexity) / n;
  if (!poly.positive(start)) return start;
  // Fallback: scan t over (0, 2].
  for (int j = 1; j <= kFallbackGridSize; ++j) {
    const double t = 2.0 * static_cast<double>(j) / kFallbackGridSize;
    if (!poly.positive(t)) return t;
  }
  throw std::logic_error("epsilon_bounds: no interior point for N=" +
                         std::to_string(query.n_scenarios) +
                         ", k=" + std::to_string(query.complexity));
}

RiskInterval solve_roots(const CertificatePolynomial& poly, const BoundQuery& query) {
  RiskInterval out;
  out.query = query;

  const bool full = query.complexity == query.n_scenarios;
  // For k = N the residual is negative at t = 0 and there is no upper root.
  const double inner = full ? 0.0 : interior_point(poly, query);

  if (full) {
    out.upper = 1.0;
    out.root_upper_t = 0.0;
  } else {
    out.root_upper_t = bracketed_root(poly, 0.0, inner);
    out.upper = 1.0 - out.root_upper_t;
  }

  double step = 1.0 / static_cast<double>(query.n_scenarios);
  double outer = inner + step;
  int scans = 0;
  while (!poly.positive(outer)) {
    if (++scans > kMaxScanSteps) {
      throw std::logic_error("epsilon_bounds: lower root not bracketed");
    }
    step *= 2.0;
    outer = inner + step;
  }
  out.root_lower_t = bracketed_root(poly, inner, outer);
  out.lower = std::max(0.0, 1.0 - out.root_lower_t);
  out.upper = std::clamp(out.upper, out.lower, 1.0);
  return out;
}

}  // namespace

void BoundQuery::validate() const {
  if (n_scenarios < 1) throw std::domain_error("sample size must be positive");
  if (complexity < 0) throw std::domain_error("complexity must be nonnegative");
  if (complexity > n_scenarios) throw std::domain_error("complexity exceeds sample size");
  if (!(confidence_param > 0.0 && confidence_param < 1.0)) {
    throw std::domain_error("confidence parameter must lie in (0, 1)");
  }
}

double log_binomial(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) throw std::domain_error("log_binomial: need 0 <= k <= n");
  k = std::min(k, n - k);
  if (k == 0) return 0.0;
  // Product form is exact to rounding for small k; lgamma differences lose
  // digits to cancellation there.
  if (k <= 128) {
    const double rest = static_cast<double>(n - k);
    double sum = 0.0;
    for (std::int64_t j = 1; j <= k; ++j) sum += std::log1p(rest / static_cast<double>(j));
    return sum;
  }
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double certificate_log_ratio(const BoundQuery& query, double v) {
  query.validate();
  if (!(v <= 1.0)) throw std::domain_error("certificate residual needs v <= 1");
  return certificate_log_ratio_t(query, 1.0 - v);
}

double certificate_log_ratio_t(const BoundQuery& query, double t) {
  query.validate();
  if (!(t >= 0.0)) throw std::domain_error("certificate residual needs t >= 0");
  const CertificatePolynomial poly(query, log_factorials(4 * query.n_scenarios + 1));
  return poly.log_ratio(t);
}

int certificate_residual_sign(const BoundQuery& query, double v) {
  query.validate();
  if (query.complexity >= query.n_scenarios) {
    throw std::domain_error("certificate residual needs complexity < sample size");
  }
  const double ratio = certificate_log_ratio(query, v);
  return (ratio > 0.0) - (ratio < 0.0);
}

RiskInterval epsilon_bounds(const BoundQuery& query) {
  query.validate();
  const CertificatePolynomial poly(query, log_factorials(4 * query.n_scenarios + 1));
  return solve_roots(poly, query);
}

std::vector<RiskInterval> epsilon_table(std::int64_t n_scenarios, double confidence_param) {
  BoundQuery query{n_scenarios, 0, confidence_param};
  query.validate();
  const ArrX log_fact = log_factorials(4 * n_scenarios + 1);
  std::vector<RiskInterval> rows;
  rows.reserve(static_cast<std::size_t>(n_scenarios + 1));
  for (std::int64_t k = 0; k <= n_scenarios; ++k) {
    query.complexity = k;
    rows.push_back(solve_roots(CertificatePolynomial(query, log_fact), query));
  }
  return rows;
}

ExplicitBoundPair explicit_bounds(const BoundQuery& query) {
  query.validate();
  const double n = static_cast<double>(query.n_scenarios);
  const double k = static_cast<double>(query.complexity);
  const double beta = query.confidence_param;
  ExplicitBoundPair out;

  if (query.complexity == 0) {
    out.upper_cap = 2.0 / n * (std::log(beta / 2.0 + std::exp(1.0)) + std::log(2.0 / beta));
    out.lower_floor = 0.0;
    return out;
  }

  const double root_k = std::sqrt(k);
  out.lambda_used =
      std::log(beta / (2.0 * (k + 1.0)) + std::exp(1.0 / root_k)) + root_k / (root_k + 1.0);
  if (query.complexity == query.n_scenarios) {
    out.upper_cap = 1.0;
  } else {
    out.upper_cap = k / n + (root_k + 1.0) / n *
                                (out.lambda_used + std::log(2.0 / beta) + std::log(k + 1.0));
  }

  const double bound_on_v =
      k / (n + 1.0) * (1.0 - 1.0 / (2.0 * root_k)) -
      root_k / (n + 1.0) * (std::log(12.0 / beta) + std::log(beta / 6.0 + k + 1.0));
  out.g_value = k / n - bound_on_v;
  out.lower_floor = std::max(0.0, k / n - 2.0 * out.g_value);
  return out;
}

double explicit_upper_bound(const BoundQuery& query) { return explicit_bounds(query).upper_cap; }

double explicit_lower_bound(const BoundQuery& query) { return explicit_bounds(query).lower_floor; }

double binomial_tail_phi(std::int64_t horizon, std::int64_t k, double v) {
  if (horizon < 1 || k < 0 || k > horizon - 1) {
    throw std::domain_error("binomial_tail_phi: need 0 <= k <= H-1");
  }
  if (!(v > 0.0 && v <= 1.0)) throw std::domain_error("binomial_tail_phi: need 0 < v <= 1");
  if (v == 1.0) return 1.0;  // only the i = H tail term survives
  const double log_v = std::log(v);
  const double log_w = std::log1p(-v);
  ArrX terms(horizon - k);
  for (std::int64_t i = k + 1; i <= horizon; ++i) {
    terms[i - k - 1] = log_binomial(horizon, i) + static_cast<double>(i) * log_v +
                       static_cast<double>(horizon - i) * log_w;
  }
  return std::exp(log_sum_exp(terms) - static_cast<double>(k + 1) * log_v);
}

}  // namespace scenario
