#include "lrex/error.hpp"

namespace lrex {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::OutOfBox: return "OutOfBox";
    case ErrorCode::WindowOutOfBox: return "WindowOutOfBox";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::EnvelopeViolation: return "EnvelopeViolation";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::MismatchedEnsemble: return "MismatchedEnsemble";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnclassifiedRegime: return "UnclassifiedRegime";
    case ErrorCode::BoundViolation: return "BoundViolation";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::ClusterMissing: return "ClusterMissing";
    case ErrorCode::BlockedPath: return "BlockedPath";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace lrex
