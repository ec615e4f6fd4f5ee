#pragma once

// Exhaustive active-set enumeration for small convex QPs with positive
// definite P: every assignment of rows to {free, lower, upper} is solved as an
// equality-constrained system and the feasible KKT point of least objective
// wins. Test-only.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>

#include "scenario/qp.hpp"

namespace scenario::testing {

inline std::optional<VecX> enumerate_active_sets(const QpProblem<double>& qp, double tol = 1e-9) {
  const Index n = qp.num_variables();
  const Index m = qp.num_constraints();
  Index combos = 1;
  for (Index i = 0; i < m; ++i) combos *= 3;

  std::optional<VecX> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (Index code = 0; code < combos; ++code) {
    Index c = code;
    std::vector<Index> rows;
    std::vector<int> sides;
    bool valid = true;
    for (Index i = 0; i < m; ++i) {
      const int state = static_cast<int>(c % 3);
      c /= 3;
      if (state == 1 && !std::isfinite(qp.lower_limits[i])) valid = false;
      if (state == 2 && !std::isfinite(qp.upper_limits[i])) valid = false;
      if (state == 2 && qp.lower_limits[i] == qp.upper_limits[i]) valid = false;
      if (state != 0) {
        rows.push_back(i);
        sides.push_back(state == 1 ? -1 : 1);
      }
    }
    if (!valid) continue;
    const Index k = static_cast<Index>(rows.size());
    if (k > n) continue;
    MatrixX<double> kkt = MatrixX<double>::Zero(n + k, n + k);
    VecX rhs(n + k);
    kkt.topLeftCorner(n, n) = qp.quadratic_term;
    rhs.head(n) = -qp.linear_term;
    for (Index r = 0; r < k; ++r) {
      kkt.block(n + r, 0, 1, n) = qp.constraint_matrix.row(rows[r]);
      kkt.block(0, n + r, n, 1) = qp.constraint_matrix.row(rows[r]).transpose();
      rhs[n + r] = sides[r] < 0 ? qp.lower_limits[rows[r]] : qp.upper_limits[rows[r]];
    }
    Eigen::FullPivLU<MatrixX<double>> lu(kkt);
    if (!lu.isInvertible()) continue;
    const VecX sol = lu.solve(rhs);
    const VecX x = sol.head(n);
    const VecX ax = qp.constraint_matrix * x;
    bool ok = true;
    for (Index i = 0; i < m && ok; ++i) {
      ok = ax[i] >= qp.lower_limits[i] - tol && ax[i] <= qp.upper_limits[i] + tol;
    }
    for (Index r = 0; r < k && ok; ++r) {
      const double y = sol[n + r];
      if (qp.lower_limits[rows[r]] == qp.upper_limits[rows[r]]) continue;
      ok = sides[r] < 0 ? y <= tol : y >= -tol;
    }
    if (!ok) continue;
    const double obj = qp.objective(x);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

}  // namespace scenario::testing
