#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqmag {

enum class ErrorCode {
  NegativeIntensity,
  InconsistentBases,
  NonPositiveRatio,
  InvalidParameter,
  GainBelowUnity,
  EfficiencyOutOfRange,
  NoPhysicalSolution,
  ZeroPower,
  NyquistViolation,
  EmptyDuration,
  ConfigModeMismatch,
  InsufficientRecord,
  MeasurementFailure,
  LockNotAcquired,
  ToneNotFound,
  InsufficientBins,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sqmag
