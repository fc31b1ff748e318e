#include "evit/error.hpp"

namespace evit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::EmptyRecording: return "EmptyRecording";
    case ErrorCode::DimensionNotDivisible: return "DimensionNotDivisible";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadTarget: return "BadTarget";
    case ErrorCode::MissingCache: return "MissingCache";
    case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, message, line)),
      code_(code),
      line_(line) {}

}  // namespace evit
