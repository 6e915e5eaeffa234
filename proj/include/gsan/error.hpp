#pragma once

#include <stdexcept>
#include <string>

namespace gsan {

enum class ErrorCode {
  NonPositiveWeight,
  IndexOutOfRange,
  ConflictingDuplicateEdge,
  SelfLoop,
  DimensionMismatch,
  OrderOutOfRange,
  EmptyChannelList,
  EmptyMask,
  LabelOutOfRange,
  NonScalarLoss,
  ShapeMismatch,
  EmptyGrid,
  EmptyHeadList,
  NegativeAlpha,
  MissingFile,
  ParseError,
  MaskOverlap,
  InvalidProbability,
  NoEdges,
  NonFiniteLoss,
  FingerprintMismatch,
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ConflictingDuplicateEdge: return "ConflictingDuplicateEdge";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::EmptyChannelList: return "EmptyChannelList";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::EmptyHeadList: return "EmptyHeadList";
    case ErrorCode::NegativeAlpha: return "NegativeAlpha";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MaskOverlap: return "MaskOverlap";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::NoEdges: return "NoEdges";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
  }
  return "UnknownError";
}

/// Exception carrying a stable machine-checkable code plus a human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gsan
