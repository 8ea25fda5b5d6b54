#pragma once

#include <stdexcept>
#include <string>

namespace qmix {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class ResolutionError : public Error { using Error::Error; };
class InstabilityError : public Error { using Error::Error; };
class DegeneracyError : public Error { using Error::Error; };
class InsufficientDataError : public Error { using Error::Error; };
class UnsupportedError : public Error { using Error::Error; };
class ConsistencyError : public Error { using Error::Error; };
// Penrose pre-check failed and no override was given.
class StabilityRefusal : public Error { using Error::Error; };

// Failure of a quadrature or march; residual is whatever measure tripped it.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace qmix
