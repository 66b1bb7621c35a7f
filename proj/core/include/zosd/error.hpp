#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zosd {

enum class ErrorCode {
  // core math
  ZeroVector,
  NonFinite,
  DimMismatch,
  EmptyInput,
  InvalidArgument,
  // candidates
  KTooLarge,
  IndexOutOfRange,
  ShapeMismatch,
  UnsortedPositions,
  // scoring
  MissingTextEmbedding,
  MissingImage,
  MissingDecoderOutput,
  EmptySeen,
  DuplicateLabel,
  // eval
  InvalidCounts,
  OneClassOnly,
  EmptyList,
  OutOfRange,
  InvalidSplit,
  // store
  BadMagic,
  TruncatedFile,
  MalformedFile,
  DuplicateKey,
  NormViolation,
  Io,
  // anything that should never happen when the library is used correctly
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type thrown by the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace zosd
