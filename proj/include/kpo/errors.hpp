#pragma once

#include <stdexcept>
#include <string>

namespace kpo {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// config/usage/I-O -> 1, numerical failures -> 2, capacity -> 3.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix/mode dimensions between arguments.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid input data (asymmetric coupling matrix, bad config values, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Requested problem size exceeds the configured enumeration or memory bound.
struct CapacityError : Error {
    using Error::Error;
};

// An operation was called on the wrong kind of object (e.g. a multi-mode
// state where a single-mode one is required).
struct UsageError : Error {
    using Error::Error;
};

// Quantum integration lost norm beyond tolerance.
struct IntegrationError : Error {
    using Error::Error;
};

// Classical trajectory amplitude blew past the physical saturation bound.
struct DivergenceError : Error {
    DivergenceError(const std::string& msg, double t) : Error(msg), time(t) {}
    double time;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace kpo
