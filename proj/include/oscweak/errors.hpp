#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace oscweak {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition (bad dimension, r <= 0, ...).
class RejectedInput : public Error {
 public:
  using Error::Error;
};

/// Operation is not available for the given group or realization.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// A computed quantity broke an invariant the toolkit asserts.
class NumericalFailure : public Error {
 public:
  NumericalFailure(std::string invariant, const std::string& detail)
      : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace oscweak
