#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pivotal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input stream. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a precondition (dangling node, stranded
/// transient states, bad query, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A linear solve that cannot be trusted.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace pivotal
