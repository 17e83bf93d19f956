#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace neutral {

template <typename Scalar>
using Array3 = Eigen::Array<Scalar, 3, 1>;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Thrown when an iterative routine fails to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// sign(t)*|t|^q, continuous through t = 0 for q > 0.
template <typename Scalar>
Scalar signed_power(Scalar t, Scalar q) {
    if (t == Scalar(0)) return Scalar(0);
    using std::abs;
    using std::copysign;
    using std::pow;
    return copysign(pow(abs(t), q), t);
}

}  // namespace neutral
