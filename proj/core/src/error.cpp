#include "srcattr/error.hpp"

namespace srcattr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingWindow: return "MissingWindow";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoPositivePairs: return "NoPositivePairs";
    case ErrorCode::InsufficientPositives: return "InsufficientPositives";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::DegenerateCluster: return "DegenerateCluster";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyLexicon: return "EmptyLexicon";
    case ErrorCode::HookFailed: return "HookFailed";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::UnknownSource: return "UnknownSource";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace srcattr
