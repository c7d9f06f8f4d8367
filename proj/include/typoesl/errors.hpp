#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace typoesl {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input could not be parsed. Carries the 1-based line number (0 if unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input parsed but violates a data invariant (duplicate key, unknown code, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A requested language, feature or error type is not present.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration (English missing, no Base records, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A document or language has no structural errors, so no fraction vector exists.
class EmptySampleError : public Error {
 public:
  using Error::Error;
};

/// All raw regressor outputs were non-positive.
class DegeneratePredictionError : public Error {
 public:
  using Error::Error;
};

/// Similarity or divergence is undefined for the given inputs.
class DomainError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, double gradient_norm)
      : Error(what + " (gradient norm " + std::to_string(gradient_norm) + ")"),
        gradient_norm_(gradient_norm) {}
  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

}  // namespace typoesl
