#pragma once

// Small generators shared by the unit tests and the acceptance run.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "scenario/qp.hpp"
#include "scenario/sv_models.hpp"

namespace scenario::testing {

inline QpProblem<double> random_qp(std::mt19937_64& gen, Index n, Index m) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.1, 2.0);
  std::bernoulli_distribution coin(0.2);
  QpProblem<double> qp;
  const MatX b = MatX::NullaryExpr(n, n, [&] { return normal(gen); });
  qp.quadratic_term = b.transpose() * b + 0.1 * MatX::Identity(n, n);
  qp.linear_term = VecX::NullaryExpr(n, [&] { return 3.0 * normal(gen); });
  qp.constraint_matrix = MatX::NullaryExpr(m, n, [&] { return normal(gen); });
  qp.lower_limits = VecX::NullaryExpr(m, [&] { return coin(gen) ? -inf : -unit(gen); });
  qp.upper_limits = VecX::NullaryExpr(m, [&] { return coin(gen) ? inf : unit(gen); });
  return qp;
}

inline Dataset scalar_data(const std::vector<double>& u, const std::vector<double>& y = {}) {
  Dataset d;
  d.inputs = Eigen::Map<const VecX>(u.data(), static_cast<Index>(u.size()));
  if (!y.empty()) d.outputs = Eigen::Map<const VecX>(y.data(), static_cast<Index>(y.size()));
  return d;
}

// Labels from a noisy quadratic boundary, so classes overlap.
inline Dataset random_labels(std::mt19937_64& gen, Index n, Index dim) {
  std::normal_distribution<double> normal;
  Dataset d;
  d.inputs = MatX::NullaryExpr(n, dim, [&] { return normal(gen); });
  d.outputs.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double score = d.inputs(i, 0) - 0.5 * d.inputs.row(i).squaredNorm() + 0.8 + 0.3 * normal(gen);
    d.outputs[i] = score >= 0.0 ? 1.0 : -1.0;
  }
  return d;
}

}  // namespace scenario::testing
