#pragma once

#include <stdexcept>
#include <string>

namespace qrough {

/// Invalid configuration or invalid arguments to an operation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a failed numerical precondition (e.g. no plateau).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A memory or dimension guard refused the request.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qrough
