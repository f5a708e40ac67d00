#pragma once

#include <stdexcept>
#include <string>

namespace hetlfd {

/// Root of the library's exception hierarchy.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape/dimension mismatch between operands. Messages name the offending operand.
struct DimensionError : Error {
    using Error::Error;
};

/// An index (e.g. an action label) is outside its admissible range.
struct IndexError : Error {
    using Error::Error;
};

/// A documented precondition was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

/// A computation produced or was fed a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

/// Invalid configuration (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Base for problems with input data files (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

/// Syntactically malformed input; messages carry the line number.
struct ParseError : DataError {
    using DataError::DataError;
};

/// Well-formed input that violates the schema (dims, ranges, duplicates).
struct SchemaError : DataError {
    using DataError::DataError;
};

/// Filesystem-level failure (missing file, unwritable directory).
struct IoError : DataError {
    using DataError::DataError;
};

}  // namespace hetlfd
