#include "nsw/errors.hpp"

namespace nsw {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::InvalidAllocation: return "InvalidAllocation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SearchSpaceExceeded: return "SearchSpaceExceeded";
    case ErrorCode::UnsupportedInstance: return "UnsupportedInstance";
    case ErrorCode::MalformedMarketState: return "MalformedMarketState";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::RelaxationUndefined: return "RelaxationUndefined";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Error";
}

}  // namespace nsw
