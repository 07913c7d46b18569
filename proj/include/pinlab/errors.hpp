#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based; 0 when not line-addressable.
class ParseError : public Error {
public:
    ParseError(std::string const& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A domain invariant does not hold. `field` names the offending field.
class ValidationError : public Error {
public:
    ValidationError(std::string field, std::string const& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    std::string const& field() const noexcept { return field_; }

private:
    std::string field_;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace pinlab
