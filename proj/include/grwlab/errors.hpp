#pragma once

#include <stdexcept>
#include <string>

namespace grwlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or index mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// An operation was called outside its documented domain (colorable set
// passed to the argument trace, empty ensemble, oversized ray set, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// The localization kernel does not resolve on the grid: the jump table
// sums to something visibly different from one.
class GridInadequateError : public Error {
public:
    using Error::Error;
};

class ZeroNormError : public Error {
public:
    using Error::Error;
};

// Step-size conditions, positivity loss, non-Hermitian input to the
// eigensolver.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Something that must hold by construction did not.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(key.empty() ? message : "'" + key + "': " + message), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace grwlab
