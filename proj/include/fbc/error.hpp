#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fbc {

enum class ErrorCode {
  kParseError,
  kValidationError,
  kUnbalancedInjections,
  kIslandedNetwork,
  kMissingGsk,
  kUnknownElement,
  kZoneMismatch,
  kNoFeasibleTransfer,
  kCascadeLimitExceeded,
  kInfeasible,
  kMismatchedResult,
  kDuplicateRecord,
  kUnknownHour,
};

/// Machine-readable name, e.g. "IslandedNetwork".
std::string_view error_code_name(ErrorCode code);

/// Exit status the CLI maps an error to: 2 for infeasible/islanded, else 1.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace fbc
