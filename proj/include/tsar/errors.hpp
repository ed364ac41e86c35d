#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsar {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a CSV file violates the input schema. Carries the 1-based
/// line number of the first offending row.
class CsvError : public Error {
public:
    CsvError(const std::string& msg, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Raised when a kernel submatrix fails its positive-definite factorization
/// at the given regularization value. Callers escalate lambda on this.
class NotPositiveDefiniteError : public Error {
public:
    explicit NotPositiveDefiniteError(double lambda)
        : Error("kernel not positive definite at lambda=" + std::to_string(lambda)),
          lambda_(lambda) {}

    double lambda() const { return lambda_; }

private:
    double lambda_;
};

/// Raised on model file version mismatches or corrupt payloads.
class SerializationError : public Error {
public:
    using Error::Error;
};

}  // namespace tsar
