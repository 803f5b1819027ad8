#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace illum {

enum class ErrorCode {
  // numeric / geometric
  ZeroVector,
  DegenerateSum,
  CollapsedOutput,
  DegenerateCorpus,
  SingularSystem,
  EigenFailure,
  SelectionEmpty,
  TooSmall,
  NonPositiveIlluminant,
  SingularPlant,
  EmptyInput,
  // data
  BadLevels,
  ParseError,
  MissingImage,
  InvalidLevels,
  DecodeError,
  AllMasked,
  MissingFoldLabel,
  BadMagic,
  BadVersion,
  TruncatedStream,
  ChecksumMismatch,
  IoError,
  // caller supplied something nonsensical
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace illum
