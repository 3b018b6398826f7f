#pragma once

#include <stdexcept>
#include <string>

namespace roadsel {

// Bad caller input: wrong sizes, out-of-range options, missing datasets.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Data that violates a domain invariant (degenerate roads, bad labels, malformed files).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Procedural generation ran out of attempts.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values during training or inference.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace roadsel
