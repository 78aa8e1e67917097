// Shared linear-algebra aliases and error types.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sipkit {

inline constexpr int kMaxDim = 8;

/// State vector: scalar chains use dimension 1, torus chains dimension m.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using LinMap = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim,
                             kMaxDim>;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

inline Point scalar_point(double x) {
    Point p(1);
    p(0) = x;
    return p;
}

/// A family, observable or config violates its declared invariants.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The requested operation is not defined for this process family.
class UnsupportedFamily : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A numerical tolerance could not be met (truncation depth, quadrature).
class ToleranceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A Monte Carlo sample or analytic quantity came out non-finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sipkit
