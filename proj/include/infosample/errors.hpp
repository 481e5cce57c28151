#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace infosample {

enum class ErrorCode {
  Precondition,
  Io,
  Format,
  Factorization,
  DegenerateField,
  GridMismatch,
  SessionExhausted,
  InvalidCell,
  NoCandidates,
  NotFound,
  Conflict,
};

std::string_view to_string(ErrorCode code);

/// Base of every error raised by the library. The code is stable and is what
/// the CLI and HTTP layers map to exit codes and status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <ErrorCode C>
class CodedError : public Error {
 public:
  explicit CodedError(const std::string& message) : Error(C, message) {}
};

using PreconditionError = CodedError<ErrorCode::Precondition>;
using IoError = CodedError<ErrorCode::Io>;
using FormatError = CodedError<ErrorCode::Format>;
using FactorizationFailure = CodedError<ErrorCode::Factorization>;
using DegenerateField = CodedError<ErrorCode::DegenerateField>;
using GridMismatch = CodedError<ErrorCode::GridMismatch>;
using SessionExhausted = CodedError<ErrorCode::SessionExhausted>;
using InvalidCell = CodedError<ErrorCode::InvalidCell>;
using NoCandidates = CodedError<ErrorCode::NoCandidates>;
using NotFound = CodedError<ErrorCode::NotFound>;
using Conflict = CodedError<ErrorCode::Conflict>;

}  // namespace infosample
