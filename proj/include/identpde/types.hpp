#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <type_traits>

namespace identpde {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Raised when a computation cannot produce a meaningful result (rank
// deficiency, root finder failure, ...). Bad arguments use std::invalid_argument.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace identpde
