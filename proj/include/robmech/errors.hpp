#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace robmech {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two objects that must live on the same type space (or have matching
/// sizes) do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Conditioning on an event of probability zero.
class ZeroMassError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant or range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation's input does not satisfy its stated precondition
/// (e.g. a mechanism that should be DSIC is not).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The LP solver could not produce a trustworthy answer.
class LpError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. Carries the 1-based line number (0 when
/// the error is not tied to a line).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace robmech
