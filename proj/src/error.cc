#include "mvsflow/error.h"

namespace mvsflow {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDepthNonPositive: return "DepthNonPositive";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kInsufficientMatches: return "InsufficientMatches";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kCheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::kRaysParallel: return "RaysParallel";
    case ErrorCode::kZeroTranslation: return "ZeroTranslation";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoValidFlow: return "NoValidFlow";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kNoSourceViews: return "NoSourceViews";
    case ErrorCode::kOutOfView: return "OutOfView";
    case ErrorCode::kTooFewViews: return "TooFewViews";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kViewIndexOutOfRange: return "ViewIndexOutOfRange";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kPrecondition: return "Precondition";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

StageError::StageError(const std::string& stage, const std::string& views,
                       const Error& cause)
    : Error(cause.code(), "stage '" + stage + "'" +
                              (views.empty() ? "" : " (views " + views + ")") +
                              ": " + cause.what()),
      stage_(stage),
      views_(views) {}

void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mvsflow
