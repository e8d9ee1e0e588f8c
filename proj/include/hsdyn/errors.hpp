#pragma once

#include <stdexcept>
#include <string>

namespace hsdyn {

/// Numerical failure (divergence, singular system, no valid root, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or serialization failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsdyn
