#pragma once

#include <stdexcept>
#include <string>

namespace obstherm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree (vector length vs operator size, non-2x2 factor).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input violates a mathematical precondition (non-Hermitian operator, bad probabilities).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// User-supplied configuration is unusable.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The energy constraint cannot be met by any exponential-family distribution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A numerical tolerance check failed during a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace obstherm
