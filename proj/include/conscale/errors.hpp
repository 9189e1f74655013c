#pragma once

#include <stdexcept>
#include <string>

namespace conscale {

// Bad arguments or malformed data, detected before any numerics run.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric operation left its domain (non-PD matrix, failed factorization).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Date binning merged two samples of the same record.
class BinCollisionError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace conscale
