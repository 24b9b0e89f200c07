#pragma once

#include <stdexcept>
#include <string>

namespace wasserflow {

/// Bad arguments or configuration supplied by the caller (CLI exit code 1).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation failed to converge or produced unusable numbers (exit code 2).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Problem size exceeds a hard solver cap (exit code 3).
class SizeCapError : public std::runtime_error {
 public:
  explicit SizeCapError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wasserflow
