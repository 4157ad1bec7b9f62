#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace healthshock {

enum class ErrorCode {
  InvalidParameter,
  InvalidState,
  TimeOutOfRange,
  HabitViolation,
  NonpositiveWealth,
  InsufficientWealth,
  DegenerateHabit,
  GLossOfPositivity,
  GridMismatch,
  StepTooCoarse,
  PathBlowup,
  EmptyBundle,
  GridOutsideDomain,
  NonConvergence,
  DegenerateTable,
  NonPositiveRate,
  ParseError,
  ConfigError,
  UsageError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::HabitViolation: return "HabitViolation";
    case ErrorCode::NonpositiveWealth: return "NonpositiveWealth";
    case ErrorCode::InsufficientWealth: return "InsufficientWealth";
    case ErrorCode::DegenerateHabit: return "DegenerateHabit";
    case ErrorCode::GLossOfPositivity: return "GLossOfPositivity";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::PathBlowup: return "PathBlowup";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::GridOutsideDomain: return "GridOutsideDomain";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateTable: return "DegenerateTable";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace healthshock
