#pragma once

#include <stdexcept>
#include <string>

namespace restrictlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: grids, configs, mismatched operands.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Scenario is mathematically degenerate (det U ≈ 0, L_K not densely defined).
class DegenerateError : public Error {
public:
    DegenerateError(const std::string& what, double measure)
        : Error(what), measure_(measure) {}
    double measure() const noexcept { return measure_; }

private:
    double measure_;
};

/// A matrix that must be invertible is numerically singular, or an eigensolve failed.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double smallest_singular_value)
        : Error(what), smin_(smallest_singular_value) {}
    double smallest_singular_value() const noexcept { return smin_; }

private:
    double smin_;
};

} // namespace restrictlab
