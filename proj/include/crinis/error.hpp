#pragma once

#include <stdexcept>
#include <string>

namespace crinis {

// Every recoverable failure in the library carries one of these codes so that
// callers (and the CLI exit-code mapping) can react without string matching.
enum class ErrorCode {
  InsideD,
  OnDelta,
  NotInTract,
  NoConvergence,
  WrongDomain,
  OrderOutOfRange,
  DegeneratePoint,
  NonDistinct,
  ParseError,
  EmptyPeriod,
  NotEscaping,
  HorizonTooSmall,
  NotInW,
  ProbeInconsistent,
  IntervalCollapsed,
  BranchObstructed,
  ConfigNotFound,
  BristleAmbiguity,
  DegenerateDirections,
  DepthExceeded,
  CurveMissesCircle,
  BadConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The description without the code-name prefix that what() carries; use it
  // when the caller prints the code separately.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsideD: return "InsideD";
    case ErrorCode::OnDelta: return "OnDelta";
    case ErrorCode::NotInTract: return "NotInTract";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::WrongDomain: return "WrongDomain";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::NonDistinct: return "NonDistinct";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyPeriod: return "EmptyPeriod";
    case ErrorCode::NotEscaping: return "NotEscaping";
    case ErrorCode::HorizonTooSmall: return "HorizonTooSmall";
    case ErrorCode::NotInW: return "NotInW";
    case ErrorCode::ProbeInconsistent: return "ProbeInconsistent";
    case ErrorCode::IntervalCollapsed: return "IntervalCollapsed";
    case ErrorCode::BranchObstructed: return "BranchObstructed";
    case ErrorCode::ConfigNotFound: return "ConfigNotFound";
    case ErrorCode::BristleAmbiguity: return "BristleAmbiguity";
    case ErrorCode::DegenerateDirections: return "DegenerateDirections";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::CurveMissesCircle: return "CurveMissesCircle";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace crinis
