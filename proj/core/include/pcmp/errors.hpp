#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcmp {

enum class ErrorCode {
  ZeroPixels,
  SchemaError,
  DanglingId,
  PoolTooSmall,
  TooFewItems,
  ShapeMismatch,
  EmptyGraph,
  LabelOutOfRange,
  TooFewPoints,
  NoEligibleCluster,
  EmptySide,
  SizeMismatch,
  UnknownItem,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (CLI, HTTP service) can map it onto exit codes or status lines.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pcmp
