#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenario/types.hpp"

namespace scenario {

enum class KernelKind { linear, gaussian, polynomial };

/// Similarity function on raw inputs.
///   linear:     a.b
///   gaussian:   exp(-|a-b|^2 / width)
///   polynomial: (a.b + offset)^degree
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double width = 1.0;
  int degree = 1;
  double offset = 0.0;

  static KernelSpec linear() { return {KernelKind::linear, 1.0, 1, 0.0}; }
  static KernelSpec gaussian(double width = 1.0) { return {KernelKind::gaussian, width, 1, 0.0}; }
  static KernelSpec polynomial(int degree, double offset = 0.0) {
    return {KernelKind::polynomial, 1.0, degree, offset};
  }

  void validate() const {
    if (kind == KernelKind::gaussian && !(width > 0.0)) {
      throw std::invalid_argument("gaussian kernel width must be positive");
    }
    if (kind == KernelKind::polynomial && (degree < 1 || !(offset >= 0.0))) {
      throw std::invalid_argument("polynomial kernel needs degree >= 1 and offset >= 0");
    }
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::gaussian:
      return "gaussian";
    case KernelKind::polynomial:
      return "polynomial";
  }
  return "unknown";
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<DerivedA>& a,
                                      const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
  switch (spec.kind) {
    case KernelKind::linear:
      return a.dot(b);
    case KernelKind::gaussian:
      return std::exp(-(a - b).squaredNorm() / Scalar(spec.width));
    case KernelKind::polynomial:
      return std::pow(a.dot(b) + Scalar(spec.offset), spec.degree);
  }
  throw std::invalid_argument("kernel_eval: unknown kernel");
}

template <typename Scalar>
struct GramMatrix {
  MatrixX<Scalar> values;
  KernelSpec spec;

  Index size() const { return values.rows(); }
};

/// Gram matrix of the rows of `inputs` (one point per row). The upper triangle is
/// evaluated and mirrored, so the result is exactly symmetric.
template <typename Scalar>
GramMatrix<Scalar> gram_matrix(const KernelSpec& spec, const MatrixX<Scalar>& inputs) {
  spec.validate();
  const Index n = inputs.rows();
  if (n == 0) throw std::invalid_argument("gram_matrix: no inputs");
  GramMatrix<Scalar> g{MatrixX<Scalar>(n, n), spec};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const Scalar v = kernel_eval(spec, inputs.row(i), inputs.row(j));
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

/// Kernel values between each row of `inputs` and one query point.
template <typename Scalar, typename Derived>
VectorX<Scalar> kernel_column(const KernelSpec& spec, const MatrixX<Scalar>& inputs,
                              const Eigen::MatrixBase<Derived>& query) {
  if (inputs.rows() > 0 && inputs.cols() != query.size()) {
    throw std::invalid_argument("kernel: input dimension mismatch");
  }
  VectorX<Scalar> col(inputs.rows());
  for (Index i = 0; i < inputs.rows(); ++i) col[i] = kernel_eval(spec, inputs.row(i), query);
  return col;
}

/// True iff the smallest eigenvalue is at least -tolerance * ||g||_2.
template <typename Scalar>
bool psd_check(const GramMatrix<Scalar>& g, Scalar tolerance) {
  if (g.values.rows() != g.values.cols()) throw std::invalid_argument("psd_check: matrix not square");
  if (g.values.size() == 0) return true;
  const Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(g.values, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const Scalar norm = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -tolerance * norm;
}

/// Rank-revealing factor K = L L' from diagonally pivoted Cholesky, stopped once
/// every remaining pivot falls below rel_tol * max diag. For PSD input the
/// discarded remainder is PSD with entries bounded by that threshold.
template <typename Scalar>
struct GramFactor {
  MatrixX<Scalar> lower;  // N x r
  std::vector<Index> pivots;  // lower.row(pivots[j]) vanishes past column j
  Scalar residual_trace = Scalar(0);

  Index rank() const { return lower.cols(); }
};

template <typename Scalar>
GramFactor<Scalar> gram_factor(const GramMatrix<Scalar>& g, Scalar rel_tol = Scalar(1e-12)) {
  const Index n = g.size();
  VectorX<Scalar> diag = g.values.diagonal();
  const Scalar threshold = rel_tol * std::max(diag.maxCoeff(), Scalar(0));
  MatrixX<Scalar> cols(n, n);
  Index rank = 0;
  std::vector<Index> pivots;
  while (rank < n) {
    Index pivot = 0;
    const Scalar d = diag.maxCoeff(&pivot);
    if (!(d > threshold)) break;
    VectorX<Scalar> col = g.values.col(pivot);
    if (rank > 0) col.noalias() -= cols.leftCols(rank) * cols.row(pivot).head(rank).transpose();
    col /= std::sqrt(d);
    for (Index p : pivots) col[p] = Scalar(0);  // exact zeros instead of rounding residue
    cols.col(rank) = col;
    pivots.push_back(pivot);
    diag -= col.cwiseAbs2();
    diag[pivot] = Scalar(0);
    ++rank;
  }
  GramFactor<Scalar> out;
  out.lower = cols.leftCols(rank);
  out.pivots = std::move(pivots);
  out.residual_trace = diag.cwiseMax(Scalar(0)).sum();
  return out;
}

}  // namespace scenario
