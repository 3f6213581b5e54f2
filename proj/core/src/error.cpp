#include "retseg/error.hpp"

namespace retseg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ZeroSizedImage: return "ZeroSizedImage";
    case ErrorCode::ZeroSizedTarget: return "ZeroSizedTarget";
    case ErrorCode::WriteFailure: return "WriteFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PairDimensionMismatch: return "PairDimensionMismatch";
    case ErrorCode::PairMismatch: return "PairMismatch";
    case ErrorCode::DatasetEmpty: return "DatasetEmpty";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::ShapeHeaderMismatch: return "ShapeHeaderMismatch";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::EmptyConfusion: return "EmptyConfusion";
    case ErrorCode::NoRows: return "NoRows";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SpatialMismatch: return "SpatialMismatch";
    case ErrorCode::OddSpatialDim: return "OddSpatialDim";
    case ErrorCode::IndivisibleSpatialDim: return "IndivisibleSpatialDim";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::MissingCache: return "MissingCache";
    case ErrorCode::ZeroDiceLoss: return "ZeroDiceLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::CountMismatch:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Config;
    case ErrorCode::NonFiniteValue:
    case ErrorCode::NonFiniteLoss:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace retseg
