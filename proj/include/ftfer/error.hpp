#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ftfer {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by caller-supplied data (ids out of range, shape mismatch, bad config).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed text input. line() is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Iterative solver stopped before reaching its tolerance.
class SolverError : public Error {
 public:
  SolverError(double residual, std::size_t iterations);
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

// Stored results disagree with a recomputation from their own inputs.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace ftfer
