#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace volcluster {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration documents. The CLI maps this to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (CSV cells, prices).
class DataError : public Error {
public:
    using Error::Error;
};

/// Input is degenerate for the requested statistic (zero variance, all values equal, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Tail fit could not be performed (tail too small).
class FitError : public Error {
public:
    using Error::Error;
};

/// The coefficient distribution has no Kesten regime, or the root could not be bracketed.
class NoKestenRegime : public Error {
public:
    using Error::Error;
};

/// A step produced a nonpositive price.
class PriceFloorBreach : public Error {
public:
    explicit PriceFloorBreach(std::size_t step)
        : Error("price floor breach at t=" + std::to_string(step)), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace volcluster
