#include <cmath>
#include <random>

#include <Eigen/Cholesky>

#include "doctest.h"
#include "scenario/kernels.hpp"

using namespace scenario;

namespace {

MatX random_inputs(std::mt19937_64& gen, Index n, Index d) {
  std::normal_distribution<double> normal;
  return MatX::NullaryExpr(n, d, [&] { return normal(gen); });
}

}  // namespace

TEST_CASE("kernel_eval values") {
  const VecX zero = VecX::Zero(1);
  const VecX one = VecX::Ones(1);
  CHECK(kernel_eval(KernelSpec::gaussian(1.0), zero, zero) == 1.0);
  CHECK(kernel_eval(KernelSpec::gaussian(1.0), zero, one) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const VecX a = (VecX(2) << 1, 2).finished();
  const VecX b = (VecX(2) << 3, 4).finished();
  CHECK(kernel_eval(KernelSpec::linear(), a, b) == 11.0);
  CHECK(kernel_eval(KernelSpec::polynomial(2, 1.0), a, b) == 144.0);
  CHECK(kernel_eval(KernelSpec::gaussian(2.0), a, b) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_eval(KernelSpec::linear(), a, one), std::invalid_argument);
}

TEST_CASE("kernel specs validate their parameters") {
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(2, -1.0).validate(), std::invalid_argument);
  CHECK_NOTHROW(KernelSpec::polynomial(3, 0.5).validate());
}

TEST_CASE("kernel symmetry and gaussian range") {
  std::mt19937_64 gen(4);
  const MatX x = random_inputs(gen, 30, 3);
  for (const auto& spec : {KernelSpec::linear(), KernelSpec::gaussian(0.7), KernelSpec::polynomial(3, 1.0)}) {
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.rows(); ++j) CHECK(kernel_eval(spec, x.row(i), x.row(j)) == kernel_eval(spec, x.row(j), x.row(i)));
  }
  const auto g = gram_matrix(KernelSpec::gaussian(0.7), x);
  CHECK((g.values.diagonal().array() == 1.0).all());
  CHECK((g.values.array() > 0.0).all());
  CHECK((g.values.array() <= 1.0).all());
}

TEST_CASE("gram_matrix shapes and fixtures") {
  const MatX single = MatX::Constant(1, 2, 0.5);
  const auto g1 = gram_matrix(KernelSpec::linear(), single);
  CHECK(g1.size() == 1);
  CHECK(g1.values(0, 0) == 0.5);
  const MatX twins = MatX::Constant(2, 1, 1.3);
  const auto g2 = gram_matrix(KernelSpec::gaussian(1.0), twins);
  CHECK((g2.values.array() == 1.0).all());
  CHECK_THROWS_AS(gram_matrix(KernelSpec::linear(), MatX(0, 2)), std::invalid_argument);
  std::mt19937_64 gen(8);
  const MatX x = random_inputs(gen, 5, 2);
  const auto g5 = gram_matrix(KernelSpec::gaussian(1.0), x);
  CHECK((g5.values - g5.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::LLT<MatX> llt(g5.values);  // no jitter
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("psd_check") {
  GramMatrix<double> id{MatX::Identity(3, 3), KernelSpec::linear()};
  CHECK(psd_check(id, 1e-8));
  GramMatrix<double> bad{(MatX(2, 2) << 1, 2, 2, 1).finished(), KernelSpec::linear()};
  CHECK_FALSE(psd_check(bad, 1e-8));
  std::mt19937_64 gen(20);
  const MatX x = random_inputs(gen, 20, 2);
  CHECK(psd_check(gram_matrix(KernelSpec::gaussian(1.0), x), 1e-8));
  CHECK(psd_check(gram_matrix(KernelSpec::polynomial(3, 1.0), x), 1e-8));
  CHECK(psd_check(gram_matrix(KernelSpec::linear(), x), 1e-8));
}

TEST_CASE("gram_factor reproduces the Gram matrix") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  const MatX x = MatX::NullaryExpr(300, 1, [&] { return unif(gen); });
  const auto g = gram_matrix(KernelSpec::gaussian(1.0), x);
  const auto f = gram_factor(g);
  CHECK(f.rank() < 60);
  CHECK((f.lower * f.lower.transpose() - g.values).cwiseAbs().maxCoeff() <= 1e-10);
  // Pivot columns are reproduced to rounding.
  for (Index j = 0; j < f.rank(); ++j) {
    const Index p = f.pivots[static_cast<std::size_t>(j)];
    CHECK((f.lower * f.lower.row(p).transpose() - g.values.col(p)).cwiseAbs().maxCoeff() <= 1e-13);
    if (j + 1 < f.rank()) CHECK(f.lower.row(p).tail(f.rank() - j - 1).cwiseAbs().maxCoeff() == 0.0);
  }
  const MatX lin = random_inputs(gen, 10, 3);
  CHECK(gram_factor(gram_matrix(KernelSpec::linear(), lin)).rank() == 3);
}
