#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retseg {

enum class ErrorCode {
  // configuration
  ConfigInvalid,
  CountMismatch,
  // data / io
  UnreadableFile,
  UnsupportedFormat,
  ZeroSizedImage,
  ZeroSizedTarget,
  WriteFailure,
  DimensionMismatch,
  PairDimensionMismatch,
  PairMismatch,
  DatasetEmpty,
  EmptyImage,
  EmptyBank,
  CorruptCheckpoint,
  ShapeHeaderMismatch,
  EmptyTrainSet,
  EmptyEvalSet,
  EmptyConfusion,
  NoRows,
  // numeric / shape
  ShapeMismatch,
  SpatialMismatch,
  OddSpatialDim,
  IndivisibleSpatialDim,
  NonFiniteValue,
  NonFiniteLoss,
  MissingCache,
  ZeroDiceLoss,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

enum class ErrorCategory { Config, Data, Numeric };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace retseg
