#pragma once

#include <stdexcept>

namespace nudgeq {

// rho >= 1
class StabilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// theta* does not exist for the given law (no sign change below s_crit)
class ClassIViolation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// solver-side failures: horizon too short, unstable marching, ...
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// a coupled-run invariant was violated
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// bad user configuration
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace nudgeq
