#pragma once

#include <stdexcept>
#include <string>

namespace rfps {

enum class ErrorCode {
  EmptyInput,
  InsufficientData,
  NonpositiveTuning,
  NoConvergence,
  DomainError,
  DegenerateScatter,
  BadSubsetSize,
  BadTrim,
  RankDeficientSubset,
  ZeroScale,
  AllFlagged,
  SingularScatter,
  NoValidDimension,
  RankDeficient,
  NoValidStart,
  RankDeficientWeighted,
  ZeroVarianceColumn,
  TooFewRegularRows,
  PreconditionViolated,
  SpecInvalid,
  TrueModelNotInPath,
  Io,
  Parse,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rfps
