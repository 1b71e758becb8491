#ifndef HELMTRACE_TYPES_HPP
#define HELMTRACE_TYPES_HPP

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace helmtrace {

using Real = double;
using Complex = std::complex<Real>;

using RealArray = Eigen::Array<Real, Eigen::Dynamic, 1>;
using ComplexArray = Eigen::Array<Complex, Eigen::Dynamic, 1>;

inline constexpr Real pi = std::numbers::pi_v<Real>;
inline constexpr Complex I{0.0, 1.0};

// Error hierarchy. Everything the library throws derives from Error so the
// CLI can report it with context and a non-zero exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (z = 0, k = 0, q <= -1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Forward integration asked to march with too few steps per wavelength.
class StepResolutionError : public Error {
public:
    using Error::Error;
};

// The rescaled field collapsed to zero along an inward integration.
class NonvanishingViolation : public Error {
public:
    using Error::Error;
};

// Riccati march diverged.
class BlowUpError : public Error {
public:
    using Error::Error;
};

// A quadrature construction produced unusable weights.
class IllConditionedError : public Error {
public:
    using Error::Error;
};

// Malformed input file or configuration.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace helmtrace

#endif  // HELMTRACE_TYPES_HPP
