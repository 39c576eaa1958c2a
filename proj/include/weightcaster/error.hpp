#pragma once

#include <stdexcept>
#include <string>

namespace weightcaster {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or lengths that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid run or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing files, malformed rows, degenerate datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, failed factorizations, non-convergent iterations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DecompositionError : public NumericalError {
 public:
  DecompositionError(const std::string& what, std::size_t pivot)
      : NumericalError(what + " (pivot " + std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace weightcaster
