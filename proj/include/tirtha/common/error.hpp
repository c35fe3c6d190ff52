#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tirtha {

enum class ErrorCode {
  Validation,
  NotFound,
  Conflict,
  DuplicateVerboseId,
  SiteCompleted,
  ContributorBanned,
  EmptyContribution,
  IllegalTransition,
  UnsupportedFormat,
  Corrupt,
  TooSmall,
  ScorerFailure,
  ExternalUnavailable,
  Exhausted,
  Malformed,
  BadCheck,
  UnknownArk,
  AlreadyBound,
  MalformedLine,
  IndexOutOfRange,
  EmptyMesh,
  InsufficientInput,
  StageFailed,
  Timeout,
  RunBusy,
  Storage,
  Integrity,
};

std::string_view to_string(ErrorCode code);

/// Domain failure carrying a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tirtha
