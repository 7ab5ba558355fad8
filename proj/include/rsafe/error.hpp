#pragma once

#include <stdexcept>
#include <string>

namespace rsafe {

enum class Errc {
  ParseError,
  InvalidArgument,
  StochasticityViolation,
  UnreachableState,
  TrivialReward,
  SingularSystem,
  RankDeficient,
  EnumerationCapExceeded,
  NonConvergence,
  SupportViolation,
  NonPositiveDistribution,
  NonPositiveReference,
  LpInfeasible,
  LpUnbounded,
  PreconditionFailed,
  ConditionNotMet,
  VerificationFailed,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::StochasticityViolation: return "StochasticityViolation";
    case Errc::UnreachableState: return "UnreachableState";
    case Errc::TrivialReward: return "TrivialReward";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::EnumerationCapExceeded: return "EnumerationCapExceeded";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::SupportViolation: return "SupportViolation";
    case Errc::NonPositiveDistribution: return "NonPositiveDistribution";
    case Errc::NonPositiveReference: return "NonPositiveReference";
    case Errc::LpInfeasible: return "LpInfeasible";
    case Errc::LpUnbounded: return "LpUnbounded";
    case Errc::PreconditionFailed: return "PreconditionFailed";
    case Errc::ConditionNotMet: return "ConditionNotMet";
    case Errc::VerificationFailed: return "VerificationFailed";
  }
  return "Unknown";
}

// Process exit status used by the command-line tool.
inline int exit_code(Errc e) {
  switch (e) {
    case Errc::ParseError: return 2;
    case Errc::InvalidArgument: return 2;
    case Errc::TrivialReward: return 3;
    case Errc::EnumerationCapExceeded: return 4;
    case Errc::ConditionNotMet: return 5;
    case Errc::PreconditionFailed: return 5;
    case Errc::VerificationFailed: return 6;
    default: return 1;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rsafe
