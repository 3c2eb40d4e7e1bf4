#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvsflow {

enum class ErrorCode {
  kInvalidArgument,
  // geometry
  kDepthNonPositive,
  kDegenerateConfiguration,
  kInsufficientMatches,
  kNoConsensus,
  kCheiralityAmbiguous,
  kRaysParallel,
  kZeroTranslation,
  // matching
  kImageTooSmall,
  kDimensionMismatch,
  kNoValidFlow,
  // depth
  kNonPositiveDepth,
  kNoSourceViews,
  // fusion
  kOutOfView,
  kTooFewViews,
  // eval
  kShapeMismatch,
  kNoOverlap,
  kEmptyCloud,
  // synth
  kViewIndexOutOfRange,
  // io / pipeline
  kParseError,
  kIoError,
  kPrecondition,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the pipeline driver; wraps a stage failure with its context.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& views,
             const Error& cause);

  const std::string& stage() const { return stage_; }
  const std::string& views() const { return views_; }

 private:
  std::string stage_;
  std::string views_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& message);

#define MVSFLOW_CHECK(cond, code, msg)   \
  do {                                   \
    if (!(cond)) ::mvsflow::Throw(code, msg); \
  } while (0)

}  // namespace mvsflow
