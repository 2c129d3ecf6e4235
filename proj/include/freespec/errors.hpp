#pragma once

#include <stdexcept>
#include <string>

namespace freespec {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (mismatched sizes, bad config values).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A decomposition or solve failed to converge or produced unusable output.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling hit its retry cap.
class GenerationFailure : public Error {
 public:
  using Error::Error;
};

/// The dilation loop ran past the ng step cap.
class CaratheodoryViolation : public Error {
 public:
  using Error::Error;
};

/// A dilation step did not grow the kernel, even after retries.
class AlgorithmStall : public Error {
 public:
  using Error::Error;
};

/// A numerical decision landed in the ill-conditioned band.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

class FitDegenerate : public Error {
 public:
  using Error::Error;
};

}  // namespace freespec
