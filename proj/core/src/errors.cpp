#include "blockade/errors.hpp"

namespace blockade {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::SpaceMismatch: return "space-mismatch";
    case ErrorCode::DimensionCapExceeded: return "dimension-cap-exceeded";
    case ErrorCode::NotHermitian: return "not-hermitian";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::MissingDrive: return "missing-drive";
    case ErrorCode::WitnessAbsent: return "witness-absent";
    case ErrorCode::SingularParameter: return "singular-parameter";
    case ErrorCode::NoPolariton: return "no-polariton";
    case ErrorCode::InvalidManifold: return "invalid-manifold";
    case ErrorCode::NonUniqueSteadyState: return "non-unique-steady-state";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::IntegratorTolerance: return "integrator-tolerance";
    case ErrorCode::UndefinedCorrelation: return "undefined-correlation";
    case ErrorCode::InvalidDistribution: return "invalid-distribution";
    case ErrorCode::ResolutionError: return "resolution-error";
    case ErrorCode::NoPeaks: return "no-peaks";
    case ErrorCode::AmbiguousAssignment: return "ambiguous-assignment";
    case ErrorCode::AllSpurious: return "all-spurious";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::UnderSampled: return "under-sampled";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::ConfigInvalid: return "config-invalid";
    case ErrorCode::IoError: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace blockade
