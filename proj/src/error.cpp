#include "attnfuse/error.hpp"

namespace attnfuse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::DegenerateEye: return "DegenerateEye";
    case ErrorKind::InvalidFrame: return "InvalidFrame";
    case ErrorKind::EmptySession: return "EmptySession";
    case ErrorKind::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorKind::WindowLongerThanSession: return "WindowLongerThanSession";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::SingleClassInput: return "SingleClassInput";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::MissingCategory: return "MissingCategory";
    case ErrorKind::WrongArity: return "WrongArity";
    case ErrorKind::InsufficientUsers: return "InsufficientUsers";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidSpec:
    case ErrorKind::ProtocolViolation:
      return 1;
    case ErrorKind::DivergedLoss:
      return 3;
    default:
      return 2;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace attnfuse
