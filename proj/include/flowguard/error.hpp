#pragma once

#include <stdexcept>
#include <string>

namespace flowguard {

// Shape problems: empty maps, zero target sizes, mismatched lengths.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-domain values: non-finite entries, thresholds outside (0,1], negative queue inputs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable, truncated, or malformed input files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowguard
