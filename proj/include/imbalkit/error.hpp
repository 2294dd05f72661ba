#pragma once

#include <stdexcept>
#include <string>

namespace imbalkit {

/// Malformed input data: schema violations, unparsable cells, empty tables.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration or model specification.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure cannot produce a defined result for its input
/// (singular matrix, zero variance, degenerate differences).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imbalkit
