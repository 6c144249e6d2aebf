#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prefrank {

enum class ErrorCode {
  kParse,
  kDanglingReference,
  kDuplicateKey,
  kInvalidDataset,
  kInvalidArgument,
  kUnknownItem,
  kSolverDiverged,
  kDegenerateLikelihood,
  kEmptyField,
  kExhausted,
  kUnexpectedPair,
  kNothingToUndo,
  kNoCandidate,
  kUnexpectedVenue,
  kAlreadyPresent,
  kNoEligibleComparisons,
  kRankDeficient,
  kIncompleteTranscript,
  kNotFound,
  kStaleAnswer,
  kStageIncomplete,
  kIo,
  kConfig,
  kSessionNotFound,
  kUnknownVenue,
  kUnknownField,
  kCorruptLog,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C API and the CLI can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prefrank
