#pragma once

#include <Eigen/Core>

namespace scenario {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using MatX = MatrixX<double>;
using VecX = VectorX<double>;
using ArrX = ArrayX<double>;

}  // namespace scenario
