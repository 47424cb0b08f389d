#pragma once

#include <stdexcept>
#include <string>

namespace starclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant (bad file, bad shape, bad parameter).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A theorem's or operation's precondition does not hold for the given input.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// Exhaustive enumeration would exceed the configured cap.
class CapExceededError : public Error {
  public:
    using Error::Error;
};

/// Something that cannot happen for valid inputs happened anyway.
class InternalError : public Error {
  public:
    using Error::Error;
};

}  // namespace starclab
