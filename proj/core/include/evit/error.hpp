#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evit {

enum class ErrorCode {
  MalformedLine,
  NonMonotoneTimestamp,
  OutOfBounds,
  BadMagic,
  TruncatedPayload,
  CountMismatch,
  EmptyRecording,
  DimensionNotDivisible,
  ShapeMismatch,
  BadTarget,
  MissingCache,
  PositionOutOfRange,
  ManifestMismatch,
  ModeMismatch,
  EmptyDataset,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. The code is the stable part; the
// message is for humans. Parser errors carry the 1-based line number.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace evit
