#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lrgemm {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes that cannot be combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value violates an operation precondition or a type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An iterative kernel did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace lrgemm
