#pragma once

#include <stdexcept>
#include <string>

namespace nsw {

enum class ErrorCode {
  InvalidInstance,
  InvalidAllocation,
  IoError,
  SearchSpaceExceeded,
  UnsupportedInstance,   // no equilibrium structure reachable by initialize()
  MalformedMarketState,  // Delta-allocation invariant broke mid-run
  IterationLimit,
  RelaxationUndefined,   // n > K, the companion polynomial is identically zero
  DegenerateInput,       // e.g. zero linear form in eval_p
  UsageError,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nsw
