#pragma once

#include <stdexcept>
#include <string>

namespace txncat {

/// Base class for every error the library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch between matrices or vectors. Messages name both shapes.
struct ShapeError : Error {
  using Error::Error;
};

/// Out-of-range index (class index, token id, ...).
struct IndexError : Error {
  using Error::Error;
};

/// Malformed input file (taxonomy TSV, word pools, vocabulary).
/// Messages carry the offending line number.
struct ValidationError : Error {
  using Error::Error;
};

/// Bad dataset content (unknown label, hierarchy violation).
struct DataError : Error {
  using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
struct ConfigError : Error {
  using Error::Error;
};

/// Non-finite value where a finite one is required.
struct NumericError : Error {
  using Error::Error;
};

/// Filesystem failure (open/read/write/rename).
struct IoError : Error {
  using Error::Error;
};

}  // namespace txncat
