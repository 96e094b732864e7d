#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyfuse {

enum class ErrorCode {
  // corpus
  MissingMedia,
  OverlappingUtterances,
  DanglingReference,
  SchemaVersionMismatch,
  InvalidRecord,
  DuplicateAnnotation,
  NoAnnotations,
  InsufficientOverlap,
  TooFewSpeakers,
  // training
  DegenerateLabels,
  NonFiniteLoss,
  ShapeMismatch,
  // audio / visual
  TooShort,
  EmptyAfterGating,
  DecodeFailure,
  WindowOutOfRange,
  ShapeUnderflow,
  // fusion
  MissingModality,
  DimMismatch,
  UntrainedUnimodal,
  SetMismatch,
  // evaluation
  LengthMismatch,
  EmptyInput,
  IncompleteReport,
  SpeakerLeakage,
  // annotation service
  ValidationError,
  UnknownUtterance,
  UnknownAnnotator,
  // plumbing
  ConfigError,
  IoError,
};

/// Maps to the process exit code used by the command line tool.
enum class ErrorCategory { validation, media, training, other };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string record = {});

  ErrorCode code() const noexcept { return code_; }
  /// Identifier of the offending record, empty when not applicable.
  const std::string& record() const noexcept { return record_; }

 private:
  ErrorCode code_;
  std::string record_;
};

}  // namespace polyfuse
