#pragma once

#include <stdexcept>
#include <string>

namespace coneiso {

// Invalid user input or violated precondition. The CLI maps this to exit 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A surface whose free boundary does not meet the cone wall orthogonally was
// handed to an operation that assumes orthogonal contact.
class OrthogonalityViolated : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical breakdown inside an otherwise valid computation (exit 1).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coneiso
