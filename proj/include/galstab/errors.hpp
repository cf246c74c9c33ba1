#pragma once

#include <stdexcept>
#include <string>

namespace galstab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. lambda0 >= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Requested value is outside the range a model can represent.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure (quadrature, integrator) failed to reach its tolerance.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// An iterative solver did not converge (root bracket, support radius).
class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A perturbation or ensemble left the constraint set C(f) = M.
class ConstraintError : public Error {
public:
    using Error::Error;
};

} // namespace galstab
