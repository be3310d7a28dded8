#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace levy_sigkernel {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidWord : public Error { public: using Error::Error; };
class DimMismatch : public Error { public: using Error::Error; };
class InvalidParameter : public Error { public: using Error::Error; };
class ScalarPartError : public Error { public: using Error::Error; };
class DepthTooSmall : public Error { public: using Error::Error; };
class InvalidTriplet : public Error { public: using Error::Error; };
class Unsupported : public Error { public: using Error::Error; };
class OutOfRange : public Error { public: using Error::Error; };
class GridMismatch : public Error { public: using Error::Error; };
class NumericalInconsistency : public Error { public: using Error::Error; };

/// Configuration error; `field()` holds the JSON path of the offending field
/// (e.g. `levels.M` or `triplets[1].intervals[0].covariance`).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace levy_sigkernel
