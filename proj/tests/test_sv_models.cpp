#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "scenario/sv_models.hpp"
#include "support/fixtures.hpp"

using namespace scenario;
using testing::random_labels;
using testing::scalar_data;

namespace {

Dataset random_regression(std::mt19937_64& gen, Index n) {
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.2);
  Dataset d;
  d.inputs = MatX::NullaryExpr(n, 1, [&] { return unif(gen); });
  d.outputs.resize(n);
  for (Index i = 0; i < n; ++i) d.outputs[i] = std::cos(d.inputs(i, 0)) + noise(gen);
  return d;
}

double svr_primary(const SvrModel& m) { return m.cost() + m.relax_weight * m.slacks.sum(); }

// Textbook SVR program in (alpha, gamma, b, xi) on the full Gram matrix, without
// factorization or tie-breaking: an independent value for the primary objective.
double svr_reference_objective(const Dataset& d, double tau, double rho, const KernelSpec& kernel) {
  const auto g = gram_matrix(kernel, d.inputs);
  const Index n = d.size();
  const Index nv = 2 * n + 2;
  QpProblem<double> qp;
  qp.quadratic_term = MatX::Zero(nv, nv);
  qp.quadratic_term.topLeftCorner(n, n) = 2.0 * tau * g.values;
  qp.linear_term = VecX::Zero(nv);
  qp.linear_term[n] = 1.0;
  qp.linear_term.tail(n).setConstant(rho);
  qp.constraint_matrix = MatX::Zero(3 * n + 1, nv);
  qp.lower_limits = VecX::Zero(3 * n + 1);
  qp.upper_limits = VecX::Constant(3 * n + 1, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < n; ++i) {
    qp.constraint_matrix.row(i).head(n) = g.values.row(i);
    qp.constraint_matrix(i, n) = 1.0;
    qp.constraint_matrix(i, n + 1) = 1.0;
    qp.constraint_matrix(i, n + 2 + i) = 1.0;
    qp.lower_limits[i] = d.outputs[i];
    qp.constraint_matrix.row(n + i).head(n) = -g.values.row(i);
    qp.constraint_matrix(n + i, n) = 1.0;
    qp.constraint_matrix(n + i, n + 1) = -1.0;
    qp.constraint_matrix(n + i, n + 2 + i) = 1.0;
    qp.lower_limits[n + i] = -d.outputs[i];
    qp.constraint_matrix(2 * n + i, n + 2 + i) = 1.0;
  }
  qp.constraint_matrix(3 * n, n) = 1.0;
  const auto sol = solve_qp(qp, SolverSettings<double>{});
  REQUIRE(sol.status == QpStatus::optimal);
  return sol.objective;
}

// min over gamma of gamma + rho sum max(0, d_i^2 - gamma): piecewise linear and
// convex in gamma, so the minimum sits at a breakpoint {0, d_i^2}.
double svdd_inner(const VecX& d2, double rho) {
  double best = rho * d2.sum();
  for (Index j = 0; j < d2.size(); ++j) {
    const double g = std::max(0.0, d2[j]);
    best = std::min(best, g + rho * (d2.array() - g).cwiseMax(0.0).sum());
  }
  return best;
}

// Zooming grid search over the center (1-D or 2-D); the objective is convex in c.
double svdd_grid_objective(const MatX& p, double rho, double c_lo, double c_hi) {
  const Index dim = p.cols();
  constexpr int kSteps = 40;
  VecX lo = VecX::Constant(dim, c_lo);
  VecX hi = VecX::Constant(dim, c_hi);
  double best = std::numeric_limits<double>::infinity();
  VecX best_c = (lo + hi) / 2;
  for (int level = 0; level < 30; ++level) {
    const int total = dim == 1 ? kSteps + 1 : (kSteps + 1) * (kSteps + 1);
    for (int idx = 0; idx < total; ++idx) {
      VecX c(dim);
      c[0] = lo[0] + (hi[0] - lo[0]) * (idx % (kSteps + 1)) / kSteps;
      if (dim == 2) c[1] = lo[1] + (hi[1] - lo[1]) * (idx / (kSteps + 1)) / kSteps;
      const double value = svdd_inner((p.rowwise() - c.transpose()).rowwise().squaredNorm(), rho);
      if (value < best) {
        best = value;
        best_c = c;
      }
    }
    const VecX half = (hi - lo) / 8;
    lo = best_c - half;
    hi = best_c + half;
  }
  return best;
}

double svdd_objective(const SvddModel& m) { return m.radius_sq + m.relax_weight * m.slacks.sum(); }

}  // namespace

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset{}.validate(), std::invalid_argument);
  auto d = scalar_data({1.0, 2.0}, {1.0});
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  auto labels = scalar_data({1.0, 2.0}, {1.0, 0.5});
  CHECK_THROWS_AS(labels.validate_labels(), std::invalid_argument);
  CHECK_THROWS_AS(fit_svm(labels, 1.0, KernelSpec::linear()), std::invalid_argument);
  CHECK_THROWS_AS(fit_svr(scalar_data({1.0}, {2.0}), 0.0, 1.0, KernelSpec::linear()), std::invalid_argument);
  CHECK_THROWS_AS(fit_svr(scalar_data({1.0}), 1.0, 1.0, KernelSpec::linear()), std::invalid_argument);
}

TEST_CASE("svr: one point is interpolated") {
  const auto d = scalar_data({0.7}, {1.9});
  for (const auto& kernel : {KernelSpec::gaussian(1.0), KernelSpec::linear(), KernelSpec::polynomial(2, 1.0)}) {
    const auto m = fit_svr(d, 0.01, 1.0, kernel);
    CHECK(m.dual_coeffs.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(m.tube) <= 1e-9);
    CHECK(m.offset == doctest::Approx(1.9).epsilon(1e-9));
    CHECK(std::abs(m.cost()) <= 1e-9);
    CHECK(svr_complexity(m, d) == 1);
    const auto p = predict(m, VecX::Constant(1, 0.7));
    CHECK(p.lower == doctest::Approx(1.9).epsilon(1e-9));
    CHECK(p.upper == doctest::Approx(1.9).epsilon(1e-9));
  }
}

TEST_CASE("svr: two identical inputs with opposite outputs") {
  const auto d = scalar_data({0.4, 0.4}, {1.0, -1.0});
  const auto m = fit_svr(d, 0.01, 10.0, KernelSpec::gaussian(1.0));
  CHECK(m.tube == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(m.offset) <= 1e-9);
  CHECK(m.weight_norm_sq <= 1e-12);
  CHECK(svr_complexity(m, d) == 2);
}

TEST_CASE("svr: slacks, warm start and the independent reference") {
  std::mt19937_64 gen(31);
  const auto d = random_regression(gen, 60);
  const KernelSpec kernel = KernelSpec::gaussian(1.0);
  for (double rho : {1.0, 0.2, 0.03}) {
    const auto m = fit_svr(d, 0.01, rho, kernel);
    CHECK(m.diagnostics.max_kkt_residual <= 1e-6);
    const VecX f = svr_constraint_values(m, d);
    CHECK((m.slacks - f.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((m.slacks.array() >= 0.0).all());
    CHECK(m.tube >= 0.0);
    // The tie-break stages leave the primary objective at its optimum.
    const double ref = svr_reference_objective(d, 0.01, rho, kernel);
    CHECK(std::abs(svr_primary(m) - ref) <= 1e-6 * (1.0 + std::abs(ref)));
    FitOptions warm;
    warm.warm_start = &m.diagnostics.solver_primal;
    const auto again = fit_svr(d, 0.01, rho, kernel, warm);
    CHECK(std::abs(again.tube - m.tube) <= 1e-8);
    CHECK(svr_complexity(again, d) == svr_complexity(m, d));
  }
}

TEST_CASE("svr: large rho covers noiseless data") {
  Dataset d = scalar_data({-2.0, -1.0, 0.0, 1.0, 2.0}, {0.0, 0.0, 1.0, 0.0, 0.0});
  const auto m = fit_svr(d, 0.01, 1e6, KernelSpec::gaussian(1.0));
  CHECK(m.slacks.sum() <= 1e-6);
}

TEST_CASE("representer consistency with a linear kernel") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  Dataset d;
  d.inputs = MatX::NullaryExpr(25, 3, [&] { return normal(gen); });
  d.outputs = d.inputs * VecX::LinSpaced(3, 1.0, -1.0) + 0.1 * VecX::NullaryExpr(25, [&] { return normal(gen); });
  const auto m = fit_svr(d, 0.05, 0.5, KernelSpec::linear());
  const VecX w = d.inputs.transpose() * m.dual_coeffs;
  const MatX probe = MatX::NullaryExpr(50, 3, [&] { return normal(gen); });
  const VecX explicit_centers = (probe * w).array() + m.offset;
  CHECK((svr_centers(m, probe) - explicit_centers).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(m.weight_norm_sq == doctest::Approx(w.squaredNorm()).epsilon(1e-8));
  CHECK_THROWS_AS(predict(m, VecX::Zero(2)), std::invalid_argument);
}

TEST_CASE("svdd: single point") {
  const auto d = scalar_data({1.5});
  const auto m = fit_svdd(d, 2.0, KernelSpec::linear());
  CHECK(m.radius_sq == 0.0);
  CHECK(m.dual_coeffs.sum() == doctest::Approx(1.0));
  CHECK(predict(m, VecX::Constant(1, 1.5)).distance_sq <= 1e-12);
  CHECK(svdd_complexity(m, d) == 1);
}

TEST_CASE("svdd: three collinear points") {
  const auto d = scalar_data({0.0, 1.0, 4.0});
  const auto m = fit_svdd(d, 10.0, KernelSpec::linear());
  const double center = m.dual_coeffs.dot(d.inputs.col(0));
  CHECK(center == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(m.radius_sq == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(svdd_complexity(m, d) == 2);
  const auto p = predict(m, VecX::Constant(1, 2.0));
  CHECK(p.inside);
  CHECK(std::abs(p.distance_sq) <= 1e-8);
  const double grid = svdd_grid_objective(d.inputs, 10.0, -1.0, 5.0);
  CHECK(std::abs(svdd_objective(m) - grid) <= 1e-4);
}

TEST_CASE("svdd: rho N below one gives the centroid") {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  Dataset d;
  d.inputs = MatX::NullaryExpr(8, 2, [&] { return normal(gen); });
  const double rho = 0.1;
  const auto m = fit_svdd(d, rho, KernelSpec::linear());
  CHECK(m.radius_sq == 0.0);
  CHECK((m.dual_coeffs.array() == 1.0 / 8.0).all());
  CHECK(svdd_complexity(m, d) == 8);
  const double grid = svdd_grid_objective(d.inputs, rho, -2.0, 2.0);
  CHECK(svdd_objective(m) <= grid + 1e-9);
  CHECK(std::abs(svdd_objective(m) - grid) <= 1e-4);
}

TEST_CASE("svdd: primal agreement on random fixtures") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal;
  for (Index dim : {1, 2}) {
    Dataset d;
    d.inputs = MatX::NullaryExpr(12, dim, [&] { return normal(gen); });
    for (double rho : {0.15, 0.3, 1.0}) {
      const auto m = fit_svdd(d, rho, KernelSpec::linear());
      CHECK(m.dual_coeffs.sum() == doctest::Approx(1.0).epsilon(1e-9));
      const VecX f = svdd_constraint_values(m, d);
      CHECK((m.slacks - f.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-6);
      // Primal stationarity in c: c - sum beta_i p_i = 0 with beta_i in the
      // subdifferential rho * [f_i > 0, f_i >= 0].
      for (Index i = 0; i < d.size(); ++i) {
        const double b = m.dual_coeffs[i];
        if (f[i] < -1e-7) CHECK(b <= 1e-7);
        if (f[i] > 1e-7) CHECK(b >= rho - 1e-7);
      }
      const double grid = svdd_grid_objective(d.inputs, rho, -3.0, 3.0);
      CHECK(svdd_objective(m) <= grid + 1e-9);
      CHECK(std::abs(svdd_objective(m) - grid) <= 1e-4);
    }
  }
}

TEST_CASE("svm: all labels +1") {
  const auto d = scalar_data({-1.0, 0.3, 2.0, 5.0}, {1.0, 1.0, 1.0, 1.0});
  const auto m = fit_svm(d, 1.0, KernelSpec::gaussian(1.0));
  CHECK(m.w_is_zero);
  CHECK(m.offset == -1.0);
  CHECK(svm_complexity(m, d) == 0);
  CHECK(predict(m, VecX::Constant(1, 100.0)).label == 1);
  CHECK(m.slacks.sum() == 0.0);
}

TEST_CASE("svm: separable pair") {
  const auto d = scalar_data({-1.0, 1.0}, {-1.0, 1.0});
  const auto m = fit_svm(d, 1e3, KernelSpec::linear());
  const double w = m.dual_coeffs.dot(d.inputs.col(0));
  CHECK(w == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(m.offset) <= 1e-8);
  CHECK_FALSE(m.w_is_zero);
  CHECK(svm_complexity(m, d) == 2);
  CHECK(m.slacks.sum() <= 1e-8);
}

TEST_CASE("svm: minority rule with identical inputs") {
  std::vector<double> u(1000, 0.25);
  std::vector<double> y(1000, 1.0);
  std::fill(y.begin() + 960, y.end(), -1.0);
  const auto d = scalar_data(u, y);
  const auto m = fit_svm(d, 0.5, KernelSpec::gaussian(1.0));
  CHECK(m.w_is_zero);
  CHECK(m.offset == -1.0);
  CHECK(svm_complexity(m, d) == 40);
}

TEST_CASE("svm: fifty-fifty conflict breaks the tie at b = -1") {
  const auto d = scalar_data({0.5, 0.5}, {1.0, -1.0});
  const auto m = fit_svm(d, 2.0, KernelSpec::gaussian(1.0));
  CHECK(m.w_is_zero);
  CHECK(m.offset == -1.0);
  CHECK(svm_complexity(m, d) == 1);
  const auto flipped = fit_svm(scalar_data({0.5, 0.5, 0.5}, {-1.0, -1.0, 1.0}), 2.0, KernelSpec::gaussian(1.0));
  CHECK(flipped.offset == 1.0);
}

TEST_CASE("svm: misclassified points always violate their constraint") {
  std::mt19937_64 gen(99);
  const auto train = random_labels(gen, 80, 2);
  const auto eval = random_labels(gen, 2000, 2);
  for (double rho : {0.05, 1.0}) {
    const auto m = fit_svm(train, rho, KernelSpec::gaussian(1.0));
    CHECK(m.diagnostics.max_kkt_residual <= 1e-6);
    CHECK((m.slacks - svm_constraint_values(m, train).cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-6);
    const VecX s = svm_scores(m, eval.inputs);
    const VecX f = svm_constraint_values(m, eval);
    int bad = 0;
    for (Index i = 0; i < eval.size(); ++i) bad += eval.outputs[i] * s[i] < 0.0 && !(f[i] > 0.0);
    CHECK(bad == 0);
  }
}

TEST_CASE("certify") {
  const auto c = certify(CertificateKind::svr, 105, 2000, 1e-4);
  CHECK(std::abs(c.interval.lower - 0.032) <= 0.001);
  CHECK(std::abs(c.interval.upper - 0.08) <= 0.001);
  CHECK(c.confidence == 1.0 - 1e-4);
  const auto v = certify(CertificateKind::svm_violation, 10, 200, 1e-3);
  CHECK(v.confidence == 1.0 - 3.0 * 1e-3);
  const auto mis = certify(CertificateKind::svm_misclassification, 10, 200, 1e-3);
  CHECK(mis.semantics == CertificateSemantics::misclassification_upper);
  CHECK(mis.confidence == v.confidence);
  CHECK(certify(CertificateKind::svdd, 50, 50, 0.1).interval.upper == 1.0);
  CHECK_THROWS_AS(certify(CertificateKind::svr, 51, 50, 0.1), std::domain_error);
}
