#pragma once

#include <stdexcept>
#include <string>

namespace metagrad {

// Shape or dimension disagreement between operands.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Linear-algebra failure: singular system, non-convergent iteration.
class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration violates a precondition. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// beta_tilde was asked for with batches too small for its moment guarantees.
class InvalidBatchConfig : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// The iterate left the declared trust region by more than the allowed factor.
class DivergenceDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NaN or Inf appeared in an iterate.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metagrad
