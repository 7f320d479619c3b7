#pragma once

#include <stdexcept>
#include <string>

namespace llport {

/// Argument outside the mathematical domain of an operation (p <= 0 in a quantile, non-PSD matrix, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Shapes that do not line up: weight vector of the wrong length, pattern of the wrong size.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scenario enumeration above the configured cap.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Inconsistent problem or run configuration. `field()` names the offending entry when known.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& message, std::string field = {})
        : std::invalid_argument(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace llport
