#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace simgrade {

// Every failure the library reports. The CLI maps IO-class codes to exit
// status 4 and the rest to 3.
enum class ErrorCode {
  MissingFile,
  IoFailure,
  MalformedRecord,
  DuplicateId,
  MixedProblemIds,
  ScoreOutOfRange,
  ValidationWithoutTrueScore,
  IndentationInconsistent,
  EmptyVocabulary,
  EmptyCorpusAfterFilter,
  NoKnownTokens,
  ZeroVector,
  DimensionMismatch,
  UndefinedNonterminal,
  NonPositiveWeight,
  MissingStart,
  DepthExceeded,
  TooFewPrograms,
  NTooLarge,
  TooFewSubmissions,
  KExceedsN,
  StartNotInSet,
  DegenerateCovariance,
  UnknownSubmissionInQueue,
  GraderHasNoRegularSubmissions,
  EmptySample,
  ConstantX,
  NoValidationEntries,
  MissingEmbedding,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  bool is_io() const noexcept {
    return code_ == ErrorCode::MissingFile || code_ == ErrorCode::IoFailure;
  }

 private:
  ErrorCode code_;
};

}  // namespace simgrade
