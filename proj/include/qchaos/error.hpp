#pragma once

#include <stdexcept>
#include <string>

namespace qchaos {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad parameters or inputs that violate a documented precondition.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Argument outside the mathematical domain of a function (poles, cutoffs, x <= 0).
class DomainError : public ValidationError {
 public:
  explicit DomainError(const std::string& msg) : ValidationError(msg) {}
};

/// A computation that started from valid inputs but failed numerically
/// (norm drift, non-convergence).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace qchaos
