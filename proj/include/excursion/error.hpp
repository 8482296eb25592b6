#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace excursion {

enum class ErrorCode {
  NonFiniteInput,
  Unsupported,
  DomainError,
  InvalidParameters,
  InsufficientData,
  DegenerateData,
  InvalidGrid,
  GridMisaligned,
  NonStationaryCoefficients,
  LengthMismatch,
  NoValidShifts,
  IndexOutOfRange,
  MissingBootstrap,
  InvalidConfig,
  DivergedToNonFinite,
  SingularCovariance,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and is what callers (and the CLI exit mapping) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the descent loop when an iterate stops being finite. Carries the
/// last finite iterate so callers can still inspect or report it.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::vector<double> last_finite, std::size_t iteration)
      : Error(ErrorCode::DivergedToNonFinite, what),
        last_finite_(std::move(last_finite)),
        iteration_(iteration) {}

  const std::vector<double>& last_finite() const noexcept { return last_finite_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::vector<double> last_finite_;
  std::size_t iteration_;
};

/// Configuration problem tied to a specific key of the experiment JSON.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorCode::InvalidConfig, "'" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace excursion
