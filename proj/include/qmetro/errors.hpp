#pragma once

#include <stdexcept>
#include <string>

namespace qmetro {

// Bad user input: config values, grids, parameter ranges.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation left its domain of validity (degenerate distribution,
// step-size underflow, insufficient truncation, invariant violation).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model evaluated outside its physical range (e.g. pair distance below the
// contact floor).
class ModelRangeError : public std::runtime_error {
 public:
  explicit ModelRangeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qmetro
