#pragma once

#include <stdexcept>
#include <string>

namespace koblab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments (dimension mismatch, zero direction, p == q, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// A point or curve lies outside the set an operation requires.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative procedure failed to converge or produced no valid candidate.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Lattice discretization produced nothing usable.
class DegenerateGridError : public Error {
public:
    using Error::Error;
};

/// No path joins the queried points in the metric graph.
class UnreachableError : public Error {
public:
    using Error::Error;
};

/// Operation not available for the given domain kind.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Plan document errors carry the JSON path of the offending field.
class ParseError : public Error {
public:
    ParseError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace koblab
