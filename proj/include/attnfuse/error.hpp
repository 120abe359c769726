#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attnfuse {

enum class ErrorKind {
  MalformedRow,
  DimensionMismatch,
  NonMonotonicTimestamp,
  OutOfRange,
  EmptyStream,
  DegenerateEye,
  InvalidFrame,
  EmptySession,
  DegenerateDistribution,
  WindowLongerThanSession,
  TooShort,
  SingleClassInput,
  NonFiniteFeature,
  DivergedLoss,
  MissingCategory,
  WrongArity,
  InsufficientUsers,
  InvalidSpec,
  InvalidConfig,
  ProtocolViolation,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Exit code a CLI should use for an error of this kind: 1 for validation
// failures, 2 for data errors, 3 for training divergence.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace attnfuse
