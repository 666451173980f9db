#pragma once

#include <stdexcept>
#include <string>

namespace dmsn {

// Malformed input data, out-of-vocabulary ids, or a checkpoint that does not
// match its variant. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss/gradient or a failed gradient check. Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or contract violations in library calls.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dmsn
