#pragma once

#include <stdexcept>
#include <string>

namespace aoi {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// P(X <= gamma) is too small for the truncated law to be meaningful.
class TruncationMassZero : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

// g(lambda) does not change sign over the search interval.
class BisectionBracketFailure : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid user-facing input: tokens, counts, flag values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace aoi
