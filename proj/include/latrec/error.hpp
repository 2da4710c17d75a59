#pragma once

#include <stdexcept>
#include <string>

namespace latrec {

enum class ErrorCode {
  kInvalidArgument,
  kUnknownUser,
  kMissingUser,
  kRepeatViolation,
  kAmbiguousRegime,
  kWorldMismatch,
  kConstraintViolated,
  kIndexOutOfRange,
  kLengthMismatch,
  kCombinatorialBlowup,
  kResourceCap,
  kParse,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kUnknownUser: return "UNKNOWN_USER";
    case ErrorCode::kMissingUser: return "MISSING_USER";
    case ErrorCode::kRepeatViolation: return "REPEAT_VIOLATION";
    case ErrorCode::kAmbiguousRegime: return "AMBIGUOUS_REGIME";
    case ErrorCode::kWorldMismatch: return "WORLD_MISMATCH";
    case ErrorCode::kConstraintViolated: return "CONSTRAINT_VIOLATED";
    case ErrorCode::kIndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kCombinatorialBlowup: return "COMBINATORIAL_BLOWUP";
    case ErrorCode::kResourceCap: return "RESOURCE_CAP";
    case ErrorCode::kParse: return "PARSE_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace latrec
