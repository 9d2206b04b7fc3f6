#pragma once

#include <stdexcept>
#include <string>

namespace smartcharge {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates its documented domain (nonpositive capacity, bad grid...).
class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV/JSON files, time series).
class InputError : public Error {
public:
  using Error::Error;
};

/// Requested discharge power exceeds what the equivalent circuit can deliver.
class InfeasiblePower : public Error {
public:
  using Error::Error;
};

/// Correlation of a constant vector was requested.
class UndefinedCorrelation : public Error {
public:
  using Error::Error;
};

class TrainingFailure : public Error {
public:
  TrainingFailure(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

} // namespace smartcharge
