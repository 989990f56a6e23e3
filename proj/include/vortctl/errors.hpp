#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vortctl {

/// Failure categories shared by all modules. The CLI maps `Validation`-like
/// codes to exit status 1 and `Numerical` codes to exit status 2.
enum class ErrorCode {
  InvalidArgument,
  NotSaturating,
  AsymmetricSet,
  NoGeneratingPair,
  AsymmetricForcing,
  AsymmetricTarget,
  TimeOutOfRange,
  DurationMismatch,
  NonPiecewiseConstant,
  InadmissiblePair,
  OutsideConvexHull,
  SegmentNotExtreme,
  NonFiniteState,
  InsufficientLadder,
  ChainTooShallow,
  DidNotConverge,
  DependentBasis,
  EpsilonUnattainable,
  Parse,
};

std::string_view to_string(ErrorCode code);

/// True for failures of the numerics themselves (blow-up, non-convergence),
/// as opposed to bad input.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vortctl
