#pragma once

#include <stdexcept>
#include <string>

namespace vqs {

// Raised for out-of-range sizes, unknown enum names and malformed config.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an input violates a numeric contract (non-unitary gate,
// distribution that does not sum to one, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// log p(s|x) is not differentiable because p(s|x) is (numerically) zero.
class DegenerateGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vqs
