#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace summachine {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed specification text. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_{line}, column_{column} {}

    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A construction or exploration bound was hit; the partial result is discarded.
class LimitExceeded : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (wrong transition kind, foreign node, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// desc() was asked to merge two states in local conflict.
class IncompatibleStates : public Error {
public:
    using Error::Error;
};

/// Query, formula or configuration refers to something that does not exist.
class QueryError : public Error {
public:
    using Error::Error;
};

} // namespace summachine
