#pragma once

#include <stdexcept>
#include <string>

namespace gexp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input, configuration or operation precondition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A configured size guard (node cap, selection cap, cost guard) was hit.
class CapExceeded : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A checked contract (monotonicity claim, certificate, identity) failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace gexp
