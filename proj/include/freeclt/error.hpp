#pragma once

#include <stdexcept>
#include <string>

namespace freeclt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad measure, bad window, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed to reach its tolerance or produced an
/// inconsistent result (non-convergence, mass defect, negative density).
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Experiment configuration could not be parsed or is inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace freeclt
