#pragma once

#include <stdexcept>
#include <string>

namespace ttn {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape or axis bookkeeping violation (mismatched contraction bonds,
// bad axis index, groups that do not partition the axes).
struct ShapeError : Error {
  using Error::Error;
};

// Model/data geometry incompatibility (wrong image side, bond dimensions
// that cannot form an isometry, mismatched layouts).
struct LayoutError : Error {
  using Error::Error;
};

// Argument outside its mathematical domain (pixel not in [0,1], empty
// dataset, label not covered by an ensemble).
struct DomainError : Error {
  using Error::Error;
};

// Invalid configuration value.
struct ConfigError : Error {
  using Error::Error;
};

// Non-finite values where finite numbers are required, or a diverging
// optimization.
struct NumericError : Error {
  using Error::Error;
};

// Malformed serialized data (bad magic, truncation, checksum failure).
struct FormatError : Error {
  using Error::Error;
};

// File could not be opened or read.
struct IoError : Error {
  using Error::Error;
};

// A trainer cache was used after the model it was built from changed.
struct CacheError : Error {
  using Error::Error;
};

}  // namespace ttn
