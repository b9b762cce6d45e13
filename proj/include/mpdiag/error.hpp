#pragma once

#include <stdexcept>
#include <string>

namespace mpdiag {

// Exception hierarchy. Each category maps onto a CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration or parameter values (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Malformed or inconsistent input data (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Divergence, singular matrices, degenerate degrees (exit code 4).
class NumericalError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace mpdiag
