#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quantobs {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// NaN or otherwise out-of-domain numeric argument.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid input index or malformed sequence argument.
class InputError : public Error {
 public:
  using Error::Error;
};

// A theorem or algorithm was invoked outside its hypotheses.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// spectral radius >= 1 where a Schur-stable matrix is required.
class InstabilityError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Enumeration or search cap exceeded.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  OverflowError(std::size_t time, const std::string& what)
      : Error(what), time_(time) {}

  // First time index whose state contained a non-finite entry.
  std::size_t time() const noexcept { return time_; }

 private:
  std::size_t time_;
};

}  // namespace quantobs
