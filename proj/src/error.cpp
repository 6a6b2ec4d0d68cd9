#include "simgrade/error.hpp"

namespace simgrade {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MixedProblemIds: return "MixedProblemIds";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::ValidationWithoutTrueScore: return "ValidationWithoutTrueScore";
    case ErrorCode::IndentationInconsistent: return "IndentationInconsistent";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::EmptyCorpusAfterFilter: return "EmptyCorpusAfterFilter";
    case ErrorCode::NoKnownTokens: return "NoKnownTokens";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UndefinedNonterminal: return "UndefinedNonterminal";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::MissingStart: return "MissingStart";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::TooFewPrograms: return "TooFewPrograms";
    case ErrorCode::NTooLarge: return "NTooLarge";
    case ErrorCode::TooFewSubmissions: return "TooFewSubmissions";
    case ErrorCode::KExceedsN: return "KExceedsN";
    case ErrorCode::StartNotInSet: return "StartNotInSet";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::UnknownSubmissionInQueue: return "UnknownSubmissionInQueue";
    case ErrorCode::GraderHasNoRegularSubmissions: return "GraderHasNoRegularSubmissions";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ConstantX: return "ConstantX";
    case ErrorCode::NoValidationEntries: return "NoValidationEntries";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace simgrade
