#pragma once

// Support vector programs as scenario programs with constraint relaxation:
//
//   SVR   min gamma + tau |w|^2 + rho sum xi   s.t. |y_i - <w,u_i> - b| - gamma <= xi_i
//   SVDD  min gamma + rho sum xi               s.t. |p_i - c|^2 - gamma <= xi_i
//   SVM   min |w|^2 + rho sum xi               s.t. 1 - y_i(<w,u_i> - b) <= xi_i
//
// Each is solved in kernel form, made unique by its tie-break rule, and
// certified from its complexity s* (the number of constraints with f_i(x*) >= 0).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "scenario/kernels.hpp"
#include "scenario/qp.hpp"
#include "scenario/risk_bounds.hpp"
#include "scenario/types.hpp"

namespace scenario {

/// Raw inputs (one point per row) and, for SVR/SVM, outputs.
struct Dataset {
  MatX inputs;
  VecX outputs;

  Index size() const { return inputs.rows(); }
  Index dimension() const { return inputs.cols(); }
  bool has_outputs() const { return outputs.size() > 0; }

  void validate() const;
  void validate_labels() const;
};

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, QpStatus status) : std::runtime_error(what), status_(status) {}
  QpStatus status() const { return status_; }

 private:
  QpStatus status_;
};

/// Diagnostics kept alongside every fitted model.
struct FitDiagnostics {
  double max_kkt_residual = 0.0;  // worst over all solver stages
  int iterations = 0;
  int gram_rank = 0;
  VecX solver_primal;  // last-stage primal, usable as a warm start
};

struct SvrModel {
  VecX dual_coeffs;  // w* = sum alpha_i u_i
  double offset = 0.0;
  double tube = 0.0;
  double ridge_weight = 0.0;
  double relax_weight = 0.0;
  KernelSpec kernel;
  MatX support_inputs;
  VecX slacks;
  double weight_norm_sq = 0.0;  // alpha' K alpha
  FitDiagnostics diagnostics;

  /// gamma* + tau |w*|^2, the design cost without the regret term.
  double cost() const { return tube + ridge_weight * weight_norm_sq; }
};

struct SvddModel {
  VecX dual_coeffs;  // c* = sum beta_i p_i
  double radius_sq = 0.0;
  double relax_weight = 0.0;
  KernelSpec kernel;
  MatX support_inputs;
  VecX slacks;
  double center_norm_sq = 0.0;  // beta' K beta
  FitDiagnostics diagnostics;
};

struct SvmModel {
  VecX dual_coeffs;
  double offset = 0.0;
  bool w_is_zero = false;
  double relax_weight = 0.0;
  KernelSpec kernel;
  MatX support_inputs;
  VecX slacks;
  double weight_norm_sq = 0.0;
  Index positive_count = 0;
  Index negative_count = 0;
  FitDiagnostics diagnostics;
};

enum class CertificateKind { svr, svdd, svm_violation, svm_misclassification };
enum class CertificateSemantics { violation, misclassification_upper };

struct RiskCertificate {
  CertificateKind kind = CertificateKind::svr;
  std::int64_t complexity = 0;
  RiskInterval interval;
  double confidence = 0.0;
  CertificateSemantics semantics = CertificateSemantics::violation;
};

const char* to_string(CertificateKind kind);

/// Options shared by the fitters. A warm start is a previous solver_primal of a
/// fit on the same inputs and kernel.
struct FitOptions {
  SolverSettings<double> solver;
  double factor_tolerance = 1e-12;
  const VecX* warm_start = nullptr;
};

SvrModel fit_svr(const Dataset& data, double tau, double rho, const KernelSpec& kernel,
                 const FitOptions& options = {});
SvddModel fit_svdd(const Dataset& data, double rho, const KernelSpec& kernel, const FitOptions& options = {});
SvmModel fit_svm(const Dataset& data, double rho, const KernelSpec& kernel, const FitOptions& options = {});

/// Per-point constraint value f_i(x*) of the fitted program on `data`.
VecX svr_constraint_values(const SvrModel& model, const Dataset& data);
VecX svdd_constraint_values(const SvddModel& model, const Dataset& data);
VecX svm_constraint_values(const SvmModel& model, const Dataset& data);

/// s*: number of points with f_i(x*) >= -active_tol. Negative active_tol selects
/// the default (1e-6 (1 + gamma*) for SVR/SVDD, 1e-6 for SVM).
std::int64_t svr_complexity(const SvrModel& model, const Dataset& data, double active_tol = -1.0);
std::int64_t svdd_complexity(const SvddModel& model, const Dataset& data, double active_tol = -1.0);
/// With w* = 0 this is the size of the minority class (N/2 on a tie).
std::int64_t svm_complexity(const SvmModel& model, const Dataset& data, double active_tol = -1.0);

RiskCertificate certify(CertificateKind kind, std::int64_t s_star, std::int64_t n, double beta);

struct SvrPrediction {
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct SvmPrediction {
  int label = 1;
  double score = 0.0;  // <w*,u> - b*
};

struct SvddPrediction {
  bool inside = true;
  double distance_sq = 0.0;
};

SvrPrediction predict(const SvrModel& model, const VecX& input);
SvmPrediction predict(const SvmModel& model, const VecX& input);
SvddPrediction predict(const SvddModel& model, const VecX& input);

/// Vectorized centers/scores/distances for every row of `inputs`.
VecX svr_centers(const SvrModel& model, const MatX& inputs);
VecX svm_scores(const SvmModel& model, const MatX& inputs);
VecX svdd_distances_sq(const SvddModel& model, const MatX& inputs);

}  // namespace scenario
