#ifndef KKL_TYPES_HPP
#define KKL_TYPES_HPP

#include <complex>

#include <Eigen/Dense>

namespace kkl {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Point sets are stored one point per row.
template <typename Scalar>
using Points = Mat<Scalar>;

using cplx = std::complex<double>;

}  // namespace kkl

#endif
