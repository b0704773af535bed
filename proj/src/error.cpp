#include "hplab/error.hpp"

namespace hplab {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::kNegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kInvalidStep: return "InvalidStep";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kCollisionAbort: return "CollisionAbort";
    case ErrorCode::kTailNotConverged: return "TailNotConverged";
    case ErrorCode::kNormalizationFailure: return "NormalizationFailure";
    case ErrorCode::kInsufficientSample: return "InsufficientSample";
    case ErrorCode::kInsufficientHorizon: return "InsufficientHorizon";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConvergenceFailure:
    case ErrorCode::kNegativeEigenvalue:
    case ErrorCode::kSingularMatrix:
    case ErrorCode::kOverflow:
    case ErrorCode::kCollisionAbort:
    case ErrorCode::kTailNotConverged:
    case ErrorCode::kNormalizationFailure:
      return true;
    default:
      return false;
  }
}

}  // namespace hplab
