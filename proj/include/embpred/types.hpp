#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace embpred {

using Index = Eigen::Index;

// Row-major throughout: rows are samples, serialization is row-contiguous.
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatXf = MatX<float>;
using MatXd = MatX<double>;
using MatXi = MatX<std::int32_t>;
using VecXf = VecX<float>;
using VecXd = VecX<double>;
using VecXi = VecX<std::int32_t>;

}  // namespace embpred
