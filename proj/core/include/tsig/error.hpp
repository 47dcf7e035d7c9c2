#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsig {

enum class ErrorCode {
  InvalidArgument,
  TruncationOverflow,
  AmbientMismatch,
  FluxNotClosed,
  NonConstantFlux,
  NotPurelyImaginary,
  AmbiguousKernel,
  AdjointMismatch,
  ZeroLambda,
  OddDimension,
  EvenDimension,
  DegenerateForm,
  TauNotPreserving,
  SymmetryNotDetected,
  TrackingAmbiguity,
  UnsupportedDimension,
  IdentityViolated,
  TailTooLarge,
  IllConditionedFit,
  ConstancyViolated,
  CommutatorCheckFailed,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure carries the module and operation that raised it so the CLI
// can surface them verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, std::string operation,
        const std::string& message)
      : std::runtime_error(message),
        code_(code),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }

 private:
  ErrorCode code_;
  std::string module_;
  std::string operation_;
};

}  // namespace tsig
