#include "pcmp/errors.hpp"

namespace pcmp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroPixels: return "ZeroPixels";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingId: return "DanglingId";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::TooFewItems: return "TooFewItems";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NoEligibleCluster: return "NoEligibleCluster";
    case ErrorCode::EmptySide: return "EmptySide";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace pcmp
