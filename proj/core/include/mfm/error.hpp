#pragma once

#include <stdexcept>
#include <string>

namespace mfm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameters or configuration. `field` names the
/// offending entry (dotted path for config fields) when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message, std::string field = {})
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Series defined on different grids or with incompatible channel counts.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A model non-degeneracy or admissibility requirement failed during simulation.
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

class InvalidStrategy : public Error {
public:
    using Error::Error;
};

class UnsupportedModel : public Error {
public:
    using Error::Error;
};

/// Too few Monte Carlo samples for the requested statistical verdict.
class StatisticalPowerError : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

} // namespace mfm
