// errors.hpp: exception types thrown by the simulator

#pragma once

#include <stdexcept>
#include <string>

namespace vstirap {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter, grid or configuration value is outside its valid domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// The dark state (or a diagnostic built on it) is undefined because both
/// couplings vanish.
class UndefinedState : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered while evaluating the equations of motion.
class NumericalDomainError : public Error {
public:
    using Error::Error;
};

/// Adaptive step size fell below the representable minimum.
class StiffnessError : public Error {
public:
    using Error::Error;
};

/// A density-matrix invariant (trace, Hermiticity, positivity) was violated.
class IntegratorFailure : public Error {
public:
    using Error::Error;
};

} // namespace vstirap
