#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srcattr {

enum class ErrorCode {
  EmptyDocument,
  MalformedRecord,
  DuplicateDocId,
  EmptyCorpus,
  InvalidFraction,
  InvalidConfig,
  EmptyWindow,
  DimensionMismatch,
  MissingWindow,
  ShapeMismatch,
  NoPositivePairs,
  InsufficientPositives,
  CorruptCheckpoint,
  DegenerateCluster,
  EmptyQuery,
  KTooLarge,
  EmptyLexicon,
  HookFailed,
  EmptyEvalSet,
  UnknownSource,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the failure class and `what()` carries a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Like Error, but also records the 1-based line of an input file.
class RecordError : public Error {
 public:
  RecordError(ErrorCode code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace srcattr
