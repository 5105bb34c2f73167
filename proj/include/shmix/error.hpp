#pragma once

#include <stdexcept>
#include <string>

namespace shmix {

/// Invalid numeric argument (non-finite input, probability outside (0,1), ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A parameter object would violate its invariants.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two pooled observations share a value; rank statistics are undefined.
class TiesError : public std::runtime_error {
public:
    TiesError(const std::string& what, double value) : std::runtime_error(what), value_(value) {}
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// Quadrature, optimisation, or floating-point evaluation failed.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario, calibration, or CLI configuration is inconsistent.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Requested problem is too large for exact enumeration.
class ScaleError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace shmix
