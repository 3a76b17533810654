#include "fbc/error.hpp"

namespace fbc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kUnbalancedInjections: return "UnbalancedInjections";
    case ErrorCode::kIslandedNetwork: return "IslandedNetwork";
    case ErrorCode::kMissingGsk: return "MissingGsk";
    case ErrorCode::kUnknownElement: return "UnknownElement";
    case ErrorCode::kZoneMismatch: return "ZoneMismatch";
    case ErrorCode::kNoFeasibleTransfer: return "NoFeasibleTransfer";
    case ErrorCode::kCascadeLimitExceeded: return "CascadeLimitExceeded";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kMismatchedResult: return "MismatchedResult";
    case ErrorCode::kDuplicateRecord: return "DuplicateRecord";
    case ErrorCode::kUnknownHour: return "UnknownHour";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIslandedNetwork:
    case ErrorCode::kInfeasible:
    case ErrorCode::kNoFeasibleTransfer:
    case ErrorCode::kCascadeLimitExceeded:
      return 2;
    default:
      return 1;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace fbc
