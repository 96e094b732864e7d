#include "polyfuse/core/error.hpp"

namespace polyfuse {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingMedia: return "MissingMedia";
    case ErrorCode::OverlappingUtterances: return "OverlappingUtterances";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::DuplicateAnnotation: return "DuplicateAnnotation";
    case ErrorCode::NoAnnotations: return "NoAnnotations";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::TooFewSpeakers: return "TooFewSpeakers";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyAfterGating: return "EmptyAfterGating";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::ShapeUnderflow: return "ShapeUnderflow";
    case ErrorCode::MissingModality: return "MissingModality";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::UntrainedUnimodal: return "UntrainedUnimodal";
    case ErrorCode::SetMismatch: return "SetMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IncompleteReport: return "IncompleteReport";
    case ErrorCode::SpeakerLeakage: return "SpeakerLeakage";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnknownUtterance: return "UnknownUtterance";
    case ErrorCode::UnknownAnnotator: return "UnknownAnnotator";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingMedia:
    case ErrorCode::TooShort:
    case ErrorCode::EmptyAfterGating:
    case ErrorCode::DecodeFailure:
    case ErrorCode::WindowOutOfRange:
    case ErrorCode::IoError:
      return ErrorCategory::media;
    case ErrorCode::DegenerateLabels:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::ShapeUnderflow:
    case ErrorCode::MissingModality:
    case ErrorCode::DimMismatch:
    case ErrorCode::UntrainedUnimodal:
    case ErrorCode::SetMismatch:
    case ErrorCode::SpeakerLeakage:
    case ErrorCode::TooFewSpeakers:
      return ErrorCategory::training;
    case ErrorCode::ConfigError:
      return ErrorCategory::other;
    default:
      return ErrorCategory::validation;
  }
}

Error::Error(ErrorCode code, const std::string& message, std::string record)
    : std::runtime_error(std::string(to_string(code)) + ": " + message +
                         (record.empty() ? "" : " [" + record + "]")),
      code_(code),
      record_(std::move(record)) {}

}  // namespace polyfuse
