#pragma once

#include <stdexcept>
#include <string>

namespace rum {

/// Invalid user-supplied geometry, interval nesting, or parameter.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (p < 1, root outside range, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Linear or nonlinear solver breakdown.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rum
