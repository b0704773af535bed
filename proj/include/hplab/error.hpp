#pragma once

#include <stdexcept>
#include <string>

namespace hplab {

enum class ErrorCode {
  kConvergenceFailure,
  kNegativeEigenvalue,
  kSingularMatrix,
  kInvalidStep,
  kOverflow,
  kCollisionAbort,
  kTailNotConverged,
  kNormalizationFailure,
  kInsufficientSample,
  kInsufficientHorizon,
  kConfigError,
  kIoError,
  kInvalidArgument,
};

const char* error_code_name(ErrorCode code) noexcept;

/// True for failures of the numerics themselves (overflow, collisions, solver
/// breakdown) as opposed to bad input.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace hplab
