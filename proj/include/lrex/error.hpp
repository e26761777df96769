#pragma once

#include <stdexcept>
#include <string>

namespace lrex {

enum class ErrorCode {
  PreconditionViolated,
  OutOfBox,
  WindowOutOfBox,
  InvalidGamma,
  InvalidSpec,
  NegativeRate,
  InvalidExponent,
  DomainError,
  InvalidProfile,
  EnvelopeViolation,
  StateSpaceTooLarge,
  MismatchedEnsemble,
  WindowTooSmall,
  QuadratureFailure,
  NoConvergence,
  UnclassifiedRegime,
  BoundViolation,
  StepUnderflow,
  ClusterMissing,
  BlockedPath,
  Unsupported,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lrex
