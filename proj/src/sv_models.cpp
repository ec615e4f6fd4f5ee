#include "scenario/sv_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace scenario {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument(std::string(what) + " must be positive");
}

// Kernel model in factored coordinates: K ~ G G' with G = factor.lower. A
// coefficient vector supported on the pivot rows, alpha_P = G_P^{-T} z, gives
// K alpha = G z and alpha' K alpha = |z|^2, so the QPs work with z directly.
struct FactoredGram {
  GramMatrix<double> gram;
  GramFactor<double> factor;

  Index size() const { return gram.size(); }
  Index rank() const { return factor.rank(); }

  VecX coefficients(const VecX& z) const {
    const Index r = rank();
    MatX lp(r, r);
    for (Index j = 0; j < r; ++j) lp.row(j) = factor.lower.row(factor.pivots[static_cast<std::size_t>(j)]);
    const VecX ap = lp.transpose().triangularView<Eigen::Upper>().solve(z);
    VecX alpha = VecX::Zero(size());
    for (Index j = 0; j < r; ++j) alpha[factor.pivots[static_cast<std::size_t>(j)]] = ap[j];
    return alpha;
  }
};

FactoredGram factorize(const Dataset& data, const KernelSpec& kernel, double tolerance) {
  FactoredGram out{gram_matrix<double>(kernel, data.inputs), {}};
  out.factor = gram_factor(out.gram, tolerance);
  return out;
}

// Lexicographic solve with diagnostics; anything short of optimal is an error.
VecX solve_stages(const std::vector<QpProblem<double>>& stages, const FitOptions& options, const char* method,
                  FitDiagnostics& diag) {
  const VecX* start = nullptr;
  if (options.warm_start && options.warm_start->size() == stages.front().num_variables()) {
    start = options.warm_start;
  }
  LexicographicTrace<double> trace;
  const auto sol = lexicographic_solve<double>(stages, options.solver, &trace, start);
  if (sol.status != QpStatus::optimal) {
    throw SolverFailure(std::string(method) + ": solver stopped with status " + to_string(sol.status), sol.status);
  }
  for (std::size_t s = 0; s < trace.solutions.size(); ++s) {
    diag.iterations += trace.solutions[s].iterations;
    diag.max_kkt_residual = std::max(diag.max_kkt_residual, trace.residuals[s].max());
  }
  diag.solver_primal = sol.primal;
  return sol.primal;
}

QpProblem<double> empty_problem(Index n, Index m) {
  QpProblem<double> qp;
  qp.quadratic_term = MatX::Zero(n, n);
  qp.linear_term = VecX::Zero(n);
  qp.constraint_matrix = MatX::Zero(m, n);
  qp.lower_limits = VecX::Constant(m, -kInf);
  qp.upper_limits = VecX::Constant(m, kInf);
  return qp;
}

// Sum_j coeffs_j k(support_j, row) for every row of `inputs`, skipping zero coefficients.
VecX kernel_expansion(const KernelSpec& kernel, const MatX& support, const VecX& coeffs, const MatX& inputs) {
  if (inputs.rows() > 0 && inputs.cols() != support.cols()) {
    throw std::invalid_argument("predict: input dimension does not match the training inputs");
  }
  std::vector<Index> active;
  for (Index j = 0; j < coeffs.size(); ++j) {
    if (coeffs[j] != 0.0) active.push_back(j);
  }
  VecX out = VecX::Zero(inputs.rows());
  for (Index i = 0; i < inputs.rows(); ++i) {
    double acc = 0.0;
    for (Index j : active) acc += coeffs[j] * kernel_eval(kernel, support.row(j), inputs.row(i));
    out[i] = acc;
  }
  return out;
}

double default_tol(double active_tol, double scale) { return active_tol >= 0.0 ? active_tol : 1e-6 * scale; }

}  // namespace

void Dataset::validate() const {
  if (inputs.rows() == 0 || inputs.cols() == 0) throw std::invalid_argument("dataset is empty");
  if (has_outputs() && outputs.size() != inputs.rows()) {
    throw std::invalid_argument("dataset inputs and outputs differ in length");
  }
  if (!inputs.allFinite() || !outputs.allFinite()) throw std::invalid_argument("dataset has non-finite values");
}

void Dataset::validate_labels() const {
  validate();
  if (!has_outputs()) throw std::invalid_argument("classification needs labels");
  for (Index i = 0; i < outputs.size(); ++i) {
    if (outputs[i] != 1.0 && outputs[i] != -1.0) throw std::invalid_argument("labels must be -1 or +1");
  }
}

const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::svr:
      return "svr";
    case CertificateKind::svdd:
      return "svdd";
    case CertificateKind::svm_violation:
      return "svm_violation";
    case CertificateKind::svm_misclassification:
      return "svm_misclassification";
  }
  return "unknown";
}

// Variables [z (r), gamma, b, xi (N), s] with s >= |b| for the third stage.
SvrModel fit_svr(const Dataset& data, double tau, double rho, const KernelSpec& kernel, const FitOptions& options) {
  data.validate();
  if (!data.has_outputs()) throw std::invalid_argument("svr needs outputs");
  require_positive(tau, "tau");
  require_positive(rho, "rho");
  const Index n = data.size();
  const auto fg = factorize(data, kernel, options.factor_tolerance);
  const Index r = fg.rank();
  const Index ig = r, ib = r + 1, ix = r + 2, is = r + 2 + n;
  const Index nv = r + n + 3;

  auto base = empty_problem(nv, 3 * n + 3);
  auto& a = base.constraint_matrix;
  const MatX& g = fg.factor.lower;
  for (Index i = 0; i < n; ++i) {
    const double y = data.outputs[i];
    a.row(i).head(r) = g.row(i);
    a(i, ib) = 1.0;
    a(i, ig) = 1.0;
    a(i, ix + i) = 1.0;
    base.lower_limits[i] = y;
    a.row(n + i).head(r) = -g.row(i);
    a(n + i, ib) = -1.0;
    a(n + i, ig) = 1.0;
    a(n + i, ix + i) = 1.0;
    base.lower_limits[n + i] = -y;
    a(2 * n + i, ix + i) = 1.0;
    base.lower_limits[2 * n + i] = 0.0;
  }
  a(3 * n, ig) = 1.0;
  base.lower_limits[3 * n] = 0.0;
  a(3 * n + 1, is) = 1.0;
  a(3 * n + 1, ib) = -1.0;
  base.lower_limits[3 * n + 1] = 0.0;
  a(3 * n + 2, is) = 1.0;
  a(3 * n + 2, ib) = 1.0;
  base.lower_limits[3 * n + 2] = 0.0;

  std::vector<QpProblem<double>> stages(3, base);
  stages[0].quadratic_term.topLeftCorner(r, r).diagonal().setConstant(2.0 * tau);
  stages[0].linear_term[ig] = 1.0;
  stages[0].linear_term.segment(ix, n).setConstant(rho);
  stages[1].linear_term[ig] = 1.0;
  stages[2].linear_term[is] = 1.0;

  SvrModel model;
  model.diagnostics.gram_rank = static_cast<int>(r);
  const VecX x = solve_stages(stages, options, "svr", model.diagnostics);
  model.dual_coeffs = fg.coefficients(x.head(r));
  model.offset = x[ib];
  model.tube = std::max(0.0, x[ig]);
  model.ridge_weight = tau;
  model.relax_weight = rho;
  model.kernel = kernel;
  model.support_inputs = data.inputs;
  const VecX k_alpha = fg.gram.values * model.dual_coeffs;
  model.weight_norm_sq = std::max(0.0, model.dual_coeffs.dot(k_alpha));
  const VecX resid = data.outputs - k_alpha - VecX::Constant(n, model.offset);
  model.slacks = (resid.cwiseAbs().array() - model.tube).cwiseMax(0.0).matrix();
  return model;
}

// Dual in variables [beta (N), u (r)] with u = G' beta, so beta' K beta = |u|^2.
SvddModel fit_svdd(const Dataset& data, double rho, const KernelSpec& kernel, const FitOptions& options) {
  data.validate();
  require_positive(rho, "rho");
  const Index n = data.size();
  const auto fg = factorize(data, kernel, options.factor_tolerance);
  const Index r = fg.rank();

  SvddModel model;
  model.diagnostics.gram_rank = static_cast<int>(r);
  // With rho N <= 1 the dual box forces beta = 1/N (or is empty); gamma = 0 is optimal.
  const bool centroid = rho * static_cast<double>(n) <= 1.0 + 1e-12;
  if (centroid) {
    model.dual_coeffs = VecX::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    auto qp = empty_problem(n + r, 1 + n + r);
    qp.quadratic_term.bottomRightCorner(r, r).diagonal().setConstant(2.0);
    qp.linear_term.head(n) = -fg.gram.values.diagonal();
    auto& a = qp.constraint_matrix;
    a.row(0).head(n).setOnes();
    qp.lower_limits[0] = 1.0;
    qp.upper_limits[0] = 1.0;
    for (Index i = 0; i < n; ++i) {
      a(1 + i, i) = 1.0;
      qp.lower_limits[1 + i] = 0.0;
      qp.upper_limits[1 + i] = rho;
    }
    a.bottomLeftCorner(r, n) = -fg.factor.lower.transpose();
    a.bottomRightCorner(r, r).setIdentity();
    qp.lower_limits.tail(r).setZero();
    qp.upper_limits.tail(r).setZero();
    const std::vector<QpProblem<double>> stages{qp};
    const VecX x = solve_stages(stages, options, "svdd", model.diagnostics);
    model.dual_coeffs = x.head(n);
  }

  const VecX k_beta = fg.gram.values * model.dual_coeffs;
  model.center_norm_sq = std::max(0.0, model.dual_coeffs.dot(k_beta));
  const VecX dist = (fg.gram.values.diagonal() - 2.0 * k_beta).array() + model.center_norm_sq;

  if (centroid) {
    model.radius_sq = 0.0;
  } else {
    // gamma + rho sum max(0, d_i^2 - gamma) has slope 1 - rho j between the j-th
    // and (j+1)-th largest distance; the smallest minimizer is the (M+1)-th
    // largest with M = floor(1/rho).
    std::vector<double> sorted(dist.data(), dist.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double m = std::floor(1.0 / rho * (1.0 + 1e-12));
    const auto idx = static_cast<std::size_t>(m);
    model.radius_sq = idx < sorted.size() ? std::max(0.0, sorted[idx]) : 0.0;
  }
  model.relax_weight = rho;
  model.kernel = kernel;
  model.support_inputs = data.inputs;
  model.slacks = (dist.array() - model.radius_sq).cwiseMax(0.0).matrix();
  return model;
}

// Variables [z (r), b, xi (N), s] with s >= |b + 1| for the tie-break stage.
SvmModel fit_svm(const Dataset& data, double rho, const KernelSpec& kernel, const FitOptions& options) {
  data.validate_labels();
  require_positive(rho, "rho");
  const Index n = data.size();
  const auto fg = factorize(data, kernel, options.factor_tolerance);
  const Index r = fg.rank();
  const Index ib = r, ix = r + 1, is = r + 1 + n;
  const Index nv = r + n + 2;

  auto base = empty_problem(nv, 2 * n + 2);
  auto& a = base.constraint_matrix;
  for (Index i = 0; i < n; ++i) {
    const double y = data.outputs[i];
    a.row(i).head(r) = y * fg.factor.lower.row(i);
    a(i, ib) = -y;
    a(i, ix + i) = 1.0;
    base.lower_limits[i] = 1.0;
    a(n + i, ix + i) = 1.0;
    base.lower_limits[n + i] = 0.0;
  }
  a(2 * n, is) = 1.0;
  a(2 * n, ib) = -1.0;
  base.lower_limits[2 * n] = 1.0;
  a(2 * n + 1, is) = 1.0;
  a(2 * n + 1, ib) = 1.0;
  base.lower_limits[2 * n + 1] = -1.0;

  std::vector<QpProblem<double>> stages(2, base);
  stages[0].quadratic_term.topLeftCorner(r, r).diagonal().setConstant(2.0);
  stages[0].linear_term.segment(ix, n).setConstant(rho);
  stages[1].linear_term[is] = 1.0;

  SvmModel model;
  model.diagnostics.gram_rank = static_cast<int>(r);
  const VecX x = solve_stages(stages, options, "svm", model.diagnostics);
  model.dual_coeffs = fg.coefficients(x.head(r));
  model.offset = x[ib];
  model.positive_count = (data.outputs.array() > 0.0).count();
  model.negative_count = n - model.positive_count;
  VecX k_alpha = fg.gram.values * model.dual_coeffs;
  model.weight_norm_sq = std::max(0.0, model.dual_coeffs.dot(k_alpha));
  const double tol_w = 1e-8 * fg.gram.values.trace() / static_cast<double>(n);
  if (model.weight_norm_sq <= tol_w) {
    // With w = 0 the program is piecewise linear in b; its |b+1|-smallest
    // minimizer is exactly -1 or +1, so clean the solver's rounding.
    model.w_is_zero = true;
    model.dual_coeffs.setZero();
    k_alpha.setZero();
    model.weight_norm_sq = 0.0;
    model.offset = model.positive_count >= model.negative_count ? -1.0 : 1.0;
  }
  model.relax_weight = rho;
  model.kernel = kernel;
  model.support_inputs = data.inputs;
  const VecX margin = data.outputs.cwiseProduct(k_alpha - VecX::Constant(n, model.offset));
  model.slacks = (1.0 - margin.array()).cwiseMax(0.0).matrix();
  return model;
}

VecX svr_centers(const SvrModel& model, const MatX& inputs) {
  VecX c = kernel_expansion(model.kernel, model.support_inputs, model.dual_coeffs, inputs);
  return c.array() + model.offset;
}

VecX svm_scores(const SvmModel& model, const MatX& inputs) {
  VecX s = kernel_expansion(model.kernel, model.support_inputs, model.dual_coeffs, inputs);
  return s.array() - model.offset;
}

VecX svdd_distances_sq(const SvddModel& model, const MatX& inputs) {
  const VecX cross = kernel_expansion(model.kernel, model.support_inputs, model.dual_coeffs, inputs);
  VecX d(inputs.rows());
  for (Index i = 0; i < inputs.rows(); ++i) {
    d[i] = kernel_eval(model.kernel, inputs.row(i), inputs.row(i)) - 2.0 * cross[i] + model.center_norm_sq;
  }
  return d;
}

VecX svr_constraint_values(const SvrModel& model, const Dataset& data) {
  if (!data.has_outputs()) throw std::invalid_argument("svr needs outputs");
  return (data.outputs - svr_centers(model, data.inputs)).cwiseAbs().array() - model.tube;
}

VecX svdd_constraint_values(const SvddModel& model, const Dataset& data) {
  return svdd_distances_sq(model, data.inputs).array() - model.radius_sq;
}

VecX svm_constraint_values(const SvmModel& model, const Dataset& data) {
  if (!data.has_outputs()) throw std::invalid_argument("svm needs labels");
  return 1.0 - data.outputs.cwiseProduct(svm_scores(model, data.inputs)).array();
}

std::int64_t svr_complexity(const SvrModel& model, const Dataset& data, double active_tol) {
  const double tol = default_tol(active_tol, 1.0 + model.tube);
  return (svr_constraint_values(model, data).array() >= -tol).count();
}

std::int64_t svdd_complexity(const SvddModel& model, const Dataset& data, double active_tol) {
  const double tol = default_tol(active_tol, 1.0 + model.radius_sq);
  return (svdd_constraint_values(model, data).array() >= -tol).count();
}

std::int64_t svm_complexity(const SvmModel& model, const Dataset& data, double active_tol) {
  if (model.w_is_zero) {
    const auto pos = (data.outputs.array() > 0.0).count();
    return std::min<std::int64_t>(pos, data.size() - pos);
  }
  const double tol = default_tol(active_tol, 1.0);
  return (svm_constraint_values(model, data).array() >= -tol).count();
}

RiskCertificate certify(CertificateKind kind, std::int64_t s_star, std::int64_t n, double beta) {
  RiskCertificate cert;
  cert.kind = kind;
  cert.complexity = s_star;
  cert.interval = epsilon_bounds(BoundQuery{n, s_star, beta});
  const bool svm = kind == CertificateKind::svm_violation || kind == CertificateKind::svm_misclassification;
  cert.confidence = svm ? 1.0 - 3.0 * beta : 1.0 - beta;
  cert.semantics = kind == CertificateKind::svm_misclassification ? CertificateSemantics::misclassification_upper
                                                                  : CertificateSemantics::violation;
  return cert;
}

SvrPrediction predict(const SvrModel& model, const VecX& input) {
  const double c = svr_centers(model, input.transpose())[0];
  return {c, c - model.tube, c + model.tube};
}

SvmPrediction predict(const SvmModel& model, const VecX& input) {
  const double s = svm_scores(model, input.transpose())[0];
  return {s >= 0.0 ? 1 : -1, s};
}

SvddPrediction predict(const SvddModel& model, const VecX& input) {
  const double d = svdd_distances_sq(model, input.transpose())[0];
  return {d <= model.radius_sq, d};
}

}  // namespace scenario
