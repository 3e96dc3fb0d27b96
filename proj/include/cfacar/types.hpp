#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfacar {

using Index = Eigen::Index;

// Dense types, templated on scalar. Everything downstream instantiates double.
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cfacar
