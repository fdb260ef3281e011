#pragma once

// Error taxonomy shared by every module. All library errors derive from
// Error so a caller (the CLI in particular) can catch one type at the
// boundary and map it to an exit status.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvartrade {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input row; carries the 1-based physical line number.
struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

/// Timestamps out of order.
struct OrderingError : Error {
    using Error::Error;
};

/// Input contained no data rows at all.
struct EmptyInputError : Error {
    using Error::Error;
};

/// Not enough samples/history for the requested computation.
struct InsufficientDataError : Error {
    using Error::Error;
};

/// A configuration value or argument outside its allowed range.
struct ParameterError : Error {
    using Error::Error;
};

/// Vector/matrix dimensions do not agree.
struct ShapeError : Error {
    using Error::Error;
};

/// A computation produced or encountered a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

/// A value outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// Cross-series bookkeeping mismatch (e.g. unequal trace lengths).
struct ConsistencyError : Error {
    using Error::Error;
};

/// Filesystem-level failure (missing file, unwritable directory).
struct IoError : Error {
    using Error::Error;
};

}  // namespace cvartrade
