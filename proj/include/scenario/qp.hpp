#pragma once

// Dense convex quadratic programs
//
//   minimize    1/2 x'Px + q'x
//   subject to  l <= Ax <= u
//
// solved by operator splitting (ADMM on the x/z split of the constraints)
// followed by an active-set polish. The problem is stored densely; the solver
// drops explicit zeros internally so that the structured programs built by the
// support vector fitters factor quickly.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenario/types.hpp"

namespace scenario {

enum class QpStatus { optimal, max_iters, infeasible };

inline const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::max_iters:
      return "max_iters";
    case QpStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

template <typename Scalar>
struct QpProblem {
  MatrixX<Scalar> quadratic_term;     // P, symmetric PSD (n x n)
  VectorX<Scalar> linear_term;        // q (n)
  MatrixX<Scalar> constraint_matrix;  // A (m x n)
  VectorX<Scalar> lower_limits;       // l (m), entries may be -inf
  VectorX<Scalar> upper_limits;       // u (m), entries may be +inf

  Index num_variables() const { return linear_term.size(); }
  Index num_constraints() const { return constraint_matrix.rows(); }

  Scalar objective(const VectorX<Scalar>& x) const {
    return Scalar(0.5) * x.dot(quadratic_term * x) + linear_term.dot(x);
  }

  /// Throws std::invalid_argument on shape mismatch, asymmetric P or l > u.
  void validate() const {
    const Index n = num_variables();
    const Index m = num_constraints();
    if (quadratic_term.rows() != n || quadratic_term.cols() != n) {
      throw std::invalid_argument("qp: quadratic term must be n x n");
    }
    if (constraint_matrix.cols() != n && m > 0) {
      throw std::invalid_argument("qp: constraint matrix must have n columns");
    }
    if (lower_limits.size() != m || upper_limits.size() != m) {
      throw std::invalid_argument("qp: limit vectors must have m entries");
    }
    const Scalar scale = std::max(Scalar(1), quadratic_term.cwiseAbs().maxCoeff());
    if (n > 0 && (quadratic_term - quadratic_term.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      throw std::invalid_argument("qp: quadratic term is not symmetric");
    }
    for (Index i = 0; i < m; ++i) {
      if (!(lower_limits[i] <= upper_limits[i])) {
        throw std::invalid_argument("qp: lower limit exceeds upper limit in row " + std::to_string(i));
      }
    }
  }
};

template <typename Scalar>
struct QpSolution {
  VectorX<Scalar> primal;
  VectorX<Scalar> dual;
  Scalar objective = Scalar(0);
  Scalar primal_residual = std::numeric_limits<Scalar>::infinity();
  Scalar dual_residual = std::numeric_limits<Scalar>::infinity();
  QpStatus status = QpStatus::max_iters;
  int iterations = 0;
  bool polished = false;
};

template <typename Scalar>
struct SolverSettings {
  Scalar tol_feas = Scalar(1e-8);
  Scalar tol_opt = Scalar(1e-8);
  int max_iters = 50000;
  Scalar tie_tolerance = Scalar(1e-7);

  // ADMM internals.
  Scalar sigma = Scalar(1e-6);
  Scalar rho = Scalar(0.1);
  Scalar relaxation = Scalar(1.6);
  bool adaptive_rho = true;
  int adaptive_rho_interval = 50;
  bool polish = true;
  Scalar infeasibility_tol = Scalar(1e-6);
  int check_interval = 10;

  void validate() const {
    if (!(tol_feas > 0 && tol_opt > 0 && tie_tolerance > 0)) {
      throw std::invalid_argument("solver tolerances must be positive");
    }
    if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  }
};

template <typename Scalar>
struct KktResiduals {
  Scalar stationarity = Scalar(0);
  Scalar feasibility = Scalar(0);
  Scalar complementarity = Scalar(0);

  Scalar max() const { return std::max({stationarity, feasibility, complementarity}); }
};

/// Max-norm residuals of the three KKT blocks for the sign convention
/// Px + q + A'y = 0, y_i >= 0 on upper-active rows and y_i <= 0 on lower-active
/// rows. A dual component pointing at an infinite limit counts in full toward
/// complementarity.
template <typename Scalar>
KktResiduals<Scalar> kkt_residuals(const QpProblem<Scalar>& problem, const QpSolution<Scalar>& candidate) {
  const auto& x = candidate.primal;
  const auto& y = candidate.dual;
  if (x.size() != problem.num_variables() || y.size() != problem.num_constraints()) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  KktResiduals<Scalar> out;
  VectorX<Scalar> grad = problem.quadratic_term * x + problem.linear_term;
  if (problem.num_constraints() > 0) grad.noalias() += problem.constraint_matrix.transpose() * y;
  out.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : Scalar(0);
  if (problem.num_constraints() == 0) return out;

  const VectorX<Scalar> ax = problem.constraint_matrix * x;
  for (Index i = 0; i < ax.size(); ++i) {
    const Scalar lo = problem.lower_limits[i];
    const Scalar hi = problem.upper_limits[i];
    out.feasibility = std::max({out.feasibility, lo - ax[i], ax[i] - hi});
    const Scalar y_up = std::max(y[i], Scalar(0));
    const Scalar y_lo = std::min(y[i], Scalar(0));
    const Scalar comp_up = std::isfinite(hi) ? y_up * std::abs(hi - ax[i]) : y_up;
    const Scalar comp_lo = std::isfinite(lo) ? -y_lo * std::abs(ax[i] - lo) : -y_lo;
    out.complementarity = std::max({out.complementarity, comp_up, comp_lo});
  }
  return out;
}

namespace detail {

template <typename Scalar>
using SparseMat = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, int>;

template <typename Scalar>
SparseMat<Scalar> drop_zeros(const MatrixX<Scalar>& dense) {
  return dense.sparseView(Scalar(0), Scalar(0));
}

template <typename Scalar>
Scalar inf_norm(const VectorX<Scalar>& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : Scalar(0);
}

// Operator-splitting iteration with cached factorization of
// P + sigma I + A' diag(rho) A, plus the active-set polish.
template <typename Scalar>
class AdmmSolver {
 public:
  using Vec = VectorX<Scalar>;
  using Sparse = SparseMat<Scalar>;

  AdmmSolver(const QpProblem<Scalar>& problem, const SolverSettings<Scalar>& settings)
      : problem_(problem), settings_(settings) {
    problem_.validate();
    settings_.validate();
    n_ = problem_.num_variables();
    m_ = problem_.num_constraints();
    p_ = drop_zeros(problem_.quadratic_term);
    a_ = m_ > 0 ? drop_zeros(problem_.constraint_matrix) : Sparse(0, n_);
    at_ = a_.transpose();
    lower_ = problem_.lower_limits;
    upper_ = problem_.upper_limits;
  }

  QpSolution<Scalar> solve(const Vec* x_init, const Vec* y_init) {
    Vec x = x_init ? *x_init : Vec::Zero(n_);
    Vec y = y_init ? *y_init : Vec::Zero(m_);
    if (x.size() != n_ || y.size() != m_) throw std::invalid_argument("qp: warm start has wrong size");
    Vec z = project(a_ * x);

    Scalar rho = settings_.rho;
    set_rho(rho);
    factorize();

    // A warm start that already sits on a vertex of the new program (typical for
    // lexicographic stages) is finished by polishing its tight rows directly.
    if (x_init && settings_.polish && m_ > 0) {
      const Vec ax = a_ * x;
      Vec y_guess = Vec::Zero(m_);
      Vec z_guess = project(ax);
      for (Index i = 0; i < m_; ++i) {
        const Scalar tol = settings_.tol_feas * (Scalar(1) + std::abs(ax[i]));
        if (std::abs(ax[i] - lower_[i]) <= tol) z_guess[i] = lower_[i];
        if (std::abs(ax[i] - upper_[i]) <= tol) z_guess[i] = upper_[i];
      }
      if (auto polished = polish(z_guess, y_guess, 0)) return *polished;
    }

    Scalar polish_threshold = Scalar(1e-3);
    Vec x_tilde(n_), z_tilde(m_), rhs(n_), y_prev(m_), z_prev(m_);
    const Scalar alpha = settings_.relaxation;
    for (int iter = 1; iter <= settings_.max_iters; ++iter) {
      y_prev = y;
      z_prev = z;
      rhs = settings_.sigma * x - problem_.linear_term;
      if (m_ > 0) rhs.noalias() += at_ * (rho_vec_.cwiseProduct(z) - y);
      x_tilde = factor_.solve(rhs);
      z_tilde = a_ * x_tilde;
      x = alpha * x_tilde + (Scalar(1) - alpha) * x;
      const Vec z_relaxed = alpha * z_tilde + (Scalar(1) - alpha) * z_prev;
      z = project(z_relaxed + y.cwiseQuotient(rho_vec_));
      y += rho_vec_.cwiseProduct(z_relaxed - z);

      const bool check = iter % settings_.check_interval == 0 || iter == settings_.max_iters;
      if (!check) continue;

      const Scalar prim = m_ > 0 ? inf_norm<Scalar>(a_ * x - z) : Scalar(0);
      const Scalar dual = inf_norm<Scalar>(dual_gradient(x, y));
      if (prim <= settings_.tol_feas && dual <= settings_.tol_opt) {
        auto sol = package(x, y, iter);
        if (settings_.polish) {
          if (auto polished = polish(z, y, iter)) return *polished;
        }
        if (sol.primal_residual <= settings_.tol_feas && sol.dual_residual <= settings_.tol_opt) {
          sol.status = QpStatus::optimal;
          return sol;
        }
      }
      if (settings_.polish && prim <= polish_threshold && dual <= polish_threshold) {
        if (auto polished = polish(z, y, iter)) return *polished;
        polish_threshold = std::max(polish_threshold * Scalar(0.1), settings_.tol_feas);
      }
      if (m_ > 0 && primal_infeasible(y - y_prev)) {
        auto sol = package(x, y, iter);
        sol.status = QpStatus::infeasible;
        return sol;
      }
      if (settings_.adaptive_rho && iter % settings_.adaptive_rho_interval == 0 && m_ > 0) {
        const Scalar new_rho = adapted_rho(x, z, y, rho);
        if (new_rho > Scalar(5) * rho || new_rho < rho / Scalar(5)) {
          rho = new_rho;
          set_rho(rho);
          factorize();
        }
      }
    }
    if (settings_.polish) {
      if (auto polished = polish(z, y, settings_.max_iters)) return *polished;
    }
    auto last = package(x, y, settings_.max_iters);
    last.status = QpStatus::max_iters;
    return last;
  }

 private:
  Vec project(const Vec& v) const { return v.cwiseMax(lower_).cwiseMin(upper_); }

  Vec dual_gradient(const Vec& x, const Vec& y) const {
    Vec g = p_ * x + problem_.linear_term;
    if (m_ > 0) g.noalias() += at_ * y;
    return g;
  }

  void set_rho(Scalar rho) {
    constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();
    rho_vec_.resize(m_);
    for (Index i = 0; i < m_; ++i) {
      if (lower_[i] == -kInf && upper_[i] == kInf) {
        rho_vec_[i] = Scalar(1e-6);
      } else if (lower_[i] == upper_[i]) {
        rho_vec_[i] = Scalar(1e3) * rho;
      } else {
        rho_vec_[i] = rho;
      }
    }
  }

  void factorize() {
    Sparse kkt = p_;
    if (m_ > 0) kkt += Sparse(at_ * rho_vec_.asDiagonal() * a_);
    Sparse shift(n_, n_);
    shift.setIdentity();
    kkt += settings_.sigma * shift;
    if (!analyzed_) {
      factor_.analyzePattern(kkt);
      analyzed_ = true;
    }
    factor_.factorize(kkt);
    if (factor_.info() != Eigen::Success) throw std::runtime_error("qp: factorization failed");
  }

  Scalar adapted_rho(const Vec& x, const Vec& z, const Vec& y, Scalar rho) const {
    const Vec ax = a_ * x;
    const Scalar prim = inf_norm<Scalar>(ax - z);
    const Scalar dual = inf_norm<Scalar>(dual_gradient(x, y));
    const Scalar prim_scale = std::max({inf_norm<Scalar>(ax), inf_norm<Scalar>(z), Scalar(1e-12)});
    const Vec aty = at_ * y;
    const Vec px = p_ * x;
    const Scalar dual_scale = std::max({inf_norm<Scalar>(px), inf_norm<Scalar>(aty),
                                        inf_norm<Scalar>(problem_.linear_term), Scalar(1e-12)});
    const Scalar ratio = (prim / prim_scale) / std::max(dual / dual_scale, Scalar(1e-30));
    return std::clamp(rho * std::sqrt(ratio), Scalar(1e-6), Scalar(1e6));
  }

  bool primal_infeasible(const Vec& delta_y) const {
    constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();
    const Scalar norm = inf_norm<Scalar>(delta_y);
    if (norm < Scalar(1e-12)) return false;
    const Scalar eps = settings_.infeasibility_tol * norm;
    if (inf_norm<Scalar>(Vec(at_ * delta_y)) > eps) return false;
    Scalar support = 0;
    for (Index i = 0; i < m_; ++i) {
      if (delta_y[i] > 0) {
        if (upper_[i] == kInf) return false;
        support += upper_[i] * delta_y[i];
      } else if (delta_y[i] < 0) {
        if (lower_[i] == -kInf) return false;
        support += lower_[i] * delta_y[i];
      }
    }
    return support < -eps;
  }

  QpSolution<Scalar> package(const Vec& x, const Vec& y, int iter) const {
    QpSolution<Scalar> sol;
    sol.primal = x;
    sol.dual = y;
    sol.iterations = iter;
    sol.objective = problem_.objective(x);
    if (m_ > 0) {
      const Vec ax = a_ * x;
      sol.primal_residual = inf_norm<Scalar>(ax - project(ax));
    } else {
      sol.primal_residual = Scalar(0);
    }
    sol.dual_residual = inf_norm<Scalar>(dual_gradient(x, y));
    return sol;
  }

  // Guess the active set from the ADMM iterate and solve the equality-constrained
  // KKT system with regularization and iterative refinement. Degenerate programs
  // make the first guess imperfect, so a few active-set corrections follow:
  // rows with wrong-signed multipliers leave, violated rows join. The result is
  // kept only if it is feasible, stationary and has duals of the right sign.
  std::optional<QpSolution<Scalar>> polish(const Vec& z, const Vec& y, int iter) const {
    std::vector<int> side(static_cast<std::size_t>(m_), 0);  // -1 lower, +1 upper, 2 equality
    for (Index i = 0; i < m_; ++i) {
      const bool at_lower = std::isfinite(lower_[i]) && (z[i] - lower_[i] < -y[i] || z[i] <= lower_[i]);
      const bool at_upper = std::isfinite(upper_[i]) && (upper_[i] - z[i] < y[i] || z[i] >= upper_[i]);
      if (lower_[i] == upper_[i]) {
        side[static_cast<std::size_t>(i)] = 2;
      } else if (at_lower || at_upper) {
        side[static_cast<std::size_t>(i)] = at_lower && (!at_upper || y[i] <= 0) ? -1 : 1;
      }
    }
    for (int round = 0; round < 10; ++round) {
      Vec xs, y_full;
      if (!solve_active(side, xs, y_full)) return std::nullopt;
      bool changed = false;
      const Vec ax = a_ * xs;
      for (Index i = 0; i < m_; ++i) {
        int& s = side[static_cast<std::size_t>(i)];
        if ((s < 0 && y_full[i] > settings_.tol_opt) || (s == 1 && y_full[i] < -settings_.tol_opt)) {
          s = 0;
          changed = true;
        } else if (s == 0 && ax[i] < lower_[i] - settings_.tol_feas) {
          s = -1;
          changed = true;
        } else if (s == 0 && ax[i] > upper_[i] + settings_.tol_feas) {
          s = 1;
          changed = true;
        }
      }
      if (changed) continue;
      for (Index i = 0; i < m_; ++i) {
        // Tiny wrong-signed multipliers are rounding noise on degenerate rows.
        const int s = side[static_cast<std::size_t>(i)];
        if (s < 0) y_full[i] = std::min(y_full[i], Scalar(0));
        if (s == 1) y_full[i] = std::max(y_full[i], Scalar(0));
      }
      auto sol = package(xs, y_full, iter);
      sol.polished = true;
      if (sol.primal_residual <= settings_.tol_feas && sol.dual_residual <= settings_.tol_opt) {
        sol.status = QpStatus::optimal;
        return sol;
      }
      return std::nullopt;
    }
    return std::nullopt;
  }

  bool solve_active(const std::vector<int>& side, Vec& xs, Vec& y_full) const {
    constexpr Scalar kDelta = Scalar(1e-7);
    std::vector<int> rows;
    for (Index i = 0; i < m_; ++i) {
      if (side[static_cast<std::size_t>(i)] != 0) rows.push_back(static_cast<int>(i));
    }
    const Index k = static_cast<Index>(rows.size());
    Vec target(k);
    for (Index r = 0; r < k; ++r) {
      const int i = rows[static_cast<std::size_t>(r)];
      target[r] = side[static_cast<std::size_t>(i)] == 1 ? upper_[i] : lower_[i];
    }

    // Row selection of A.
    Sparse select(k, m_);
    {
      std::vector<Eigen::Triplet<Scalar>> trips;
      trips.reserve(static_cast<std::size_t>(k));
      for (Index r = 0; r < k; ++r) trips.emplace_back(static_cast<int>(r), rows[static_cast<std::size_t>(r)], Scalar(1));
      select.setFromTriplets(trips.begin(), trips.end());
    }
    const Sparse a_act = select * a_;
    const Sparse a_act_t = a_act.transpose();

    Sparse reg = p_;
    Sparse shift(n_, n_);
    shift.setIdentity();
    reg += kDelta * shift;
    if (k > 0) reg += Sparse(a_act_t * a_act) / kDelta;
    Eigen::SimplicialLDLT<Sparse> ldlt;
    ldlt.compute(reg);
    if (ldlt.info() != Eigen::Success) return false;

    xs = Vec::Zero(n_);
    Vec ys = Vec::Zero(k);
    const Scalar scale = std::max({Scalar(1), inf_norm<Scalar>(problem_.linear_term), inf_norm<Scalar>(target)});
    for (int refine = 0; refine < 40; ++refine) {
      // Residual of the unregularized KKT system.
      Vec r1 = -problem_.linear_term - p_ * xs;
      if (k > 0) r1.noalias() -= a_act_t * ys;
      const Vec r2 = k > 0 ? Vec(target - a_act * xs) : Vec();
      const Scalar res = std::max(inf_norm<Scalar>(r1), inf_norm<Scalar>(r2));
      if (res <= std::numeric_limits<Scalar>::epsilon() * Scalar(16) * scale) break;
      Vec rhs = r1;
      if (k > 0) rhs.noalias() += a_act_t * r2 / kDelta;
      const Vec dx = ldlt.solve(rhs);
      xs += dx;
      if (k > 0) ys += (a_act * dx - r2) / kDelta;
    }
    y_full = Vec::Zero(m_);
    for (Index r = 0; r < k; ++r) y_full[rows[static_cast<std::size_t>(r)]] = ys[r];
    return true;
  }

  QpProblem<Scalar> problem_;
  SolverSettings<Scalar> settings_;
  Index n_ = 0;
  Index m_ = 0;
  Sparse p_;
  Sparse a_;
  Sparse at_;
  Vec lower_;
  Vec upper_;
  Vec rho_vec_;
  Eigen::SimplicialLDLT<Sparse> factor_;
  bool analyzed_ = false;
};

}  // namespace detail

/// Solve a dense convex QP. Deterministic given inputs; an optional initial
/// primal (and dual) iterate may be injected.
template <typename Scalar>
QpSolution<Scalar> solve_qp(const QpProblem<Scalar>& problem, const SolverSettings<Scalar>& settings,
                            const VectorX<Scalar>* initial_primal = nullptr,
                            const VectorX<Scalar>* initial_dual = nullptr) {
  detail::AdmmSolver<Scalar> solver(problem, settings);
  return solver.solve(initial_primal, initial_dual);
}

/// Rows R with R'R = P (up to rounding), restricted to the columns where P has
/// a nonzero diagonal; fixing Rx fixes x'Px.
template <typename Scalar>
MatrixX<Scalar> quadratic_factor(const MatrixX<Scalar>& quadratic) {
  const Index n = quadratic.rows();
  std::vector<Index> support;
  for (Index i = 0; i < n; ++i) {
    if (quadratic(i, i) > Scalar(0)) support.push_back(i);
  }
  const Index s = static_cast<Index>(support.size());
  if (s == 0) return MatrixX<Scalar>(0, n);
  MatrixX<Scalar> sub(s, s);
  for (Index a = 0; a < s; ++a)
    for (Index b = 0; b < s; ++b) sub(a, b) = quadratic(support[a], support[b]);
  const Eigen::LDLT<MatrixX<Scalar>> ldlt(sub);
  const auto d = ldlt.vectorD();
  const Scalar cutoff = Scalar(1e-14) * std::max(Scalar(1), d.cwiseAbs().maxCoeff());
  // sub = P' L D L' P  =>  rows sqrt(d_j) (L' P)_j.
  MatrixX<Scalar> lt_perm = MatrixX<Scalar>(ldlt.matrixU()) * ldlt.transpositionsP().transpose();
  std::vector<Index> keep;
  for (Index j = 0; j < s; ++j) {
    if (d[j] > cutoff) keep.push_back(j);
  }
  MatrixX<Scalar> factor = MatrixX<Scalar>::Zero(static_cast<Index>(keep.size()), n);
  for (Index r = 0; r < static_cast<Index>(keep.size()); ++r) {
    const Index j = keep[r];
    const Scalar w = std::sqrt(d[j]);
    for (Index c = 0; c < s; ++c) factor(r, support[c]) = w * lt_perm(j, c);
  }
  return factor;
}

/// Per-stage record of a lexicographic solve.
template <typename Scalar>
struct LexicographicTrace {
  std::vector<QpSolution<Scalar>> solutions;
  std::vector<KktResiduals<Scalar>> residuals;  // against each stage's pinned problem
};

/// Minimize the stage objectives in order over a shared feasible set. After each
/// stage its optimal face is pinned: the quadratic part through Rx = Rx* (R'R = P,
/// constant over the optimal face of a convex QP), and the rest through the
/// multipliers of a polished solution (or q'x <= q'x* + tie_tolerance when the
/// solution is not polished). Returns the last stage's solution.
template <typename Scalar>
QpSolution<Scalar> lexicographic_solve(std::span<const QpProblem<Scalar>> stages,
                                       const SolverSettings<Scalar>& settings,
                                       LexicographicTrace<Scalar>* trace = nullptr,
                                       const VectorX<Scalar>* initial_primal = nullptr) {
  if (stages.empty()) throw std::invalid_argument("lexicographic_solve: no stages");
  const Index n = stages.front().num_variables();
  for (const auto& stage : stages) {
    if (stage.num_variables() != n || stage.num_constraints() != stages.front().num_constraints()) {
      throw std::invalid_argument("lexicographic_solve: stages must share variables and constraints");
    }
  }
  constexpr Scalar kInf = std::numeric_limits<Scalar>::infinity();
  MatrixX<Scalar> a = stages.front().constraint_matrix;
  VectorX<Scalar> lower = stages.front().lower_limits;
  VectorX<Scalar> upper = stages.front().upper_limits;
  if (a.cols() != n) a.resize(0, n);

  QpSolution<Scalar> solution;
  VectorX<Scalar> warm;
  const VectorX<Scalar>* start = initial_primal;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    QpProblem<Scalar> problem{stages[s].quadratic_term, stages[s].linear_term, a, lower, upper};
    solution = solve_qp(problem, settings, start);
    if (trace) {
      trace->solutions.push_back(solution);
      trace->residuals.push_back(kkt_residuals(problem, solution));
    }
    if (solution.status != QpStatus::optimal || s + 1 == stages.size()) break;

    const MatrixX<Scalar> factor = quadratic_factor<Scalar>(stages[s].quadratic_term);
    // With exact multipliers y* the optimal face is {x feasible : Rx = Rx*, rows
    // with y*_i != 0 active}, by complementary slackness. Without them, fall back
    // to bounding the linear part by its optimum plus tie_tolerance.
    const bool face = solution.polished;
    const Index extra = factor.rows() + (face ? 0 : 1);
    const Index m = a.rows();
    if (face) {
      const Scalar cutoff = Scalar(1e-9) * std::max(Scalar(1), solution.dual.cwiseAbs().maxCoeff());
      for (Index i = 0; i < m; ++i) {
        if (solution.dual[i] > cutoff) lower[i] = upper[i];
        if (solution.dual[i] < -cutoff) upper[i] = lower[i];
      }
    }
    a.conservativeResize(m + extra, n);
    lower.conservativeResize(m + extra);
    upper.conservativeResize(m + extra);
    if (factor.rows() > 0) {
      const VectorX<Scalar> pinned = factor * solution.primal;
      a.middleRows(m, factor.rows()) = factor;
      lower.segment(m, factor.rows()) = pinned;
      upper.segment(m, factor.rows()) = pinned;
    }
    if (!face) {
      a.row(m + extra - 1) = stages[s].linear_term.transpose();
      lower[m + extra - 1] = -kInf;
      upper[m + extra - 1] = stages[s].linear_term.dot(solution.primal) + settings.tie_tolerance;
    }
    warm = solution.primal;
    start = &warm;
  }
  return solution;
}

}  // namespace scenario
