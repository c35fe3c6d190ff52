#include "tirtha/common/error.hpp"

namespace tirtha {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Conflict: return "CONFLICT";
    case ErrorCode::DuplicateVerboseId: return "DUPLICATE_VERBOSE_ID";
    case ErrorCode::SiteCompleted: return "SITE_COMPLETED";
    case ErrorCode::ContributorBanned: return "CONTRIBUTOR_BANNED";
    case ErrorCode::EmptyContribution: return "EMPTY_CONTRIBUTION";
    case ErrorCode::IllegalTransition: return "ILLEGAL_TRANSITION";
    case ErrorCode::UnsupportedFormat: return "UNSUPPORTED_FORMAT";
    case ErrorCode::Corrupt: return "CORRUPT";
    case ErrorCode::TooSmall: return "TOO_SMALL";
    case ErrorCode::ScorerFailure: return "SCORER_FAILURE";
    case ErrorCode::ExternalUnavailable: return "EXTERNAL_UNAVAILABLE";
    case ErrorCode::Exhausted: return "EXHAUSTED";
    case ErrorCode::Malformed: return "MALFORMED";
    case ErrorCode::BadCheck: return "BAD_CHECK";
    case ErrorCode::UnknownArk: return "UNKNOWN_ARK";
    case ErrorCode::AlreadyBound: return "ALREADY_BOUND";
    case ErrorCode::MalformedLine: return "MALFORMED_LINE";
    case ErrorCode::IndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::EmptyMesh: return "EMPTY_MESH";
    case ErrorCode::InsufficientInput: return "INSUFFICIENT_INPUT";
    case ErrorCode::StageFailed: return "STAGE_FAILED";
    case ErrorCode::Timeout: return "TIMEOUT";
    case ErrorCode::RunBusy: return "RUN_BUSY";
    case ErrorCode::Storage: return "STORAGE";
    case ErrorCode::Integrity: return "INTEGRITY";
  }
  return "UNKNOWN";
}

}  // namespace tirtha
