#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace circlebif {

enum class ErrorCode {
  BasePointMismatch,
  CompositionBaseMismatch,
  InvalidFamily,
  ParseError,
  DegenerateConstruction,
  NotDiffeomorphism,
  RationalNotAttained,
  MonotonicityUnverified,
  NonIsolatedOrbits,
  NonGenericFamily,
  SingularSystem,
  NoConvergence,
  RankDeficient,
  PreconditionViolation,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BasePointMismatch: return "BasePointMismatch";
    case ErrorCode::CompositionBaseMismatch: return "CompositionBaseMismatch";
    case ErrorCode::InvalidFamily: return "InvalidFamily";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DegenerateConstruction: return "DegenerateConstruction";
    case ErrorCode::NotDiffeomorphism: return "NotDiffeomorphism";
    case ErrorCode::RationalNotAttained: return "RationalNotAttained";
    case ErrorCode::MonotonicityUnverified: return "MonotonicityUnverified";
    case ErrorCode::NonIsolatedOrbits: return "NonIsolatedOrbits";
    case ErrorCode::NonGenericFamily: return "NonGenericFamily";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::PreconditionViolation, what);
}

}  // namespace circlebif
