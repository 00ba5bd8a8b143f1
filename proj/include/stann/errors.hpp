#pragma once

#include <stdexcept>
#include <string>

namespace stann {

// Malformed or inconsistent input data (bad CSV, bad dates, bad shapes of
// user-supplied files). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure at runtime (non-finite loss, undefined metric,
// singularity without fallback). CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Bad flags / config keys / preconditions on arguments. CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stann
