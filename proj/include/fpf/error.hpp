#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpf {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates an operation's preconditions (bad model, wrong
/// dimension, non-PSD covariance, non-affine h for the exact solver, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A configuration file or command line could not be understood.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A computation lost stability or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The control displacement failed the invertibility test at one or more
/// particles and the filter was configured to abort.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(std::size_t step, std::vector<std::size_t> flagged)
      : Error("inadmissible control at step " + std::to_string(step) + ": " +
              std::to_string(flagged.size()) + " particle(s) flagged"),
        step_(step),
        flagged_(std::move(flagged)) {}

  std::size_t step() const noexcept { return step_; }
  const std::vector<std::size_t>& flagged() const noexcept { return flagged_; }

 private:
  std::size_t step_;
  std::vector<std::size_t> flagged_;
};

}  // namespace fpf
