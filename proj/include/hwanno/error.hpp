#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hwanno {

enum class ErrorCode {
  InvalidArgument,
  NoInk,
  BadImage,
  BackendFailure,
  UnknownId,
  ZeroArea,
  ShapeMismatch,
  InfeasibleLabel,
  EmptyCorpus,
  EmptyWord,
  IoFailure,
  ParseError,
  ValidationError,
  UnsupportedVersion,
  MissingText,
  UnknownSession,
  PhaseOrder,
  Conflict,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a machine-readable code so the
// service and CLI layers can map it to HTTP statuses and exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {});

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace hwanno
