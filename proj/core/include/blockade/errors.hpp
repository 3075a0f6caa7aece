#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockade {

enum class ErrorCode {
  InvalidDimension,
  IndexOutOfRange,
  DimensionMismatch,
  SpaceMismatch,
  DimensionCapExceeded,
  NotHermitian,
  InvalidState,
  InvalidSpec,
  MissingDrive,
  WitnessAbsent,
  SingularParameter,
  NoPolariton,
  InvalidManifold,
  NonUniqueSteadyState,
  SolverFailure,
  IntegratorTolerance,
  UndefinedCorrelation,
  InvalidDistribution,
  ResolutionError,
  NoPeaks,
  AmbiguousAssignment,
  AllSpurious,
  NonConvergence,
  UnderSampled,
  InsufficientData,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// The single exception type thrown by the library. `code()` identifies the
/// failure class; `what()` carries a human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blockade
