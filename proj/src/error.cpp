#include "hwanno/error.hpp"

namespace hwanno {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoInk: return "NoInk";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::ZeroArea: return "ZeroArea";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InfeasibleLabel: return "InfeasibleLabel";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyWord: return "EmptyWord";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MissingText: return "MissingText";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::PhaseOrder: return "PhaseOrder";
    case ErrorCode::Conflict: return "Conflict";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

}  // namespace hwanno
