#pragma once

#include <stdexcept>
#include <string>

namespace hal {

/// Input violates a domain invariant (score out of range, duplicate id, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is structurally malformed (bad JSON line, missing CSV header, ...).
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hal
