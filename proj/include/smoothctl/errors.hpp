#pragma once

#include <stdexcept>
#include <string>

namespace smoothctl {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not defined for the given program layout.
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative or truncated computation failed its accuracy check.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared during a computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or header.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Waveform sample exceeds the converter full scale.
class ClippingError : public std::runtime_error {
 public:
  ClippingError(const std::string& what, std::size_t first_sample)
      : std::runtime_error(what), first_sample_(first_sample) {}
  std::size_t first_sample() const noexcept { return first_sample_; }

 private:
  std::size_t first_sample_;
};

}  // namespace smoothctl
