#pragma once

#include <stdexcept>
#include <string>

namespace cliniseq {

// Malformed or missing input data. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint, vocabulary or tensor shapes that do not fit together. Exit code 3.
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public CompatibilityError {
 public:
  using CompatibilityError::CompatibilityError;
};

// Non-finite loss or parameters during training. Exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("dimension mismatch: " + what);
}

}  // namespace cliniseq
