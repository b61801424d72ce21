#include "sqmag/errors.hpp"

namespace sqmag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeIntensity: return "NegativeIntensity";
    case ErrorCode::InconsistentBases: return "InconsistentBases";
    case ErrorCode::NonPositiveRatio: return "NonPositiveRatio";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::GainBelowUnity: return "GainBelowUnity";
    case ErrorCode::EfficiencyOutOfRange: return "EfficiencyOutOfRange";
    case ErrorCode::NoPhysicalSolution: return "NoPhysicalSolution";
    case ErrorCode::ZeroPower: return "ZeroPower";
    case ErrorCode::NyquistViolation: return "NyquistViolation";
    case ErrorCode::EmptyDuration: return "EmptyDuration";
    case ErrorCode::ConfigModeMismatch: return "ConfigModeMismatch";
    case ErrorCode::InsufficientRecord: return "InsufficientRecord";
    case ErrorCode::MeasurementFailure: return "MeasurementFailure";
    case ErrorCode::LockNotAcquired: return "LockNotAcquired";
    case ErrorCode::ToneNotFound: return "ToneNotFound";
    case ErrorCode::InsufficientBins: return "InsufficientBins";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sqmag
