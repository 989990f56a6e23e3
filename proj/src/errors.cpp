#include "vortctl/errors.hpp"

namespace vortctl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::NotSaturating: return "not saturating within budget";
    case ErrorCode::AsymmetricSet: return "asymmetric set";
    case ErrorCode::NoGeneratingPair: return "no generating pair";
    case ErrorCode::AsymmetricForcing: return "asymmetric forcing";
    case ErrorCode::AsymmetricTarget: return "asymmetric target set";
    case ErrorCode::TimeOutOfRange: return "time out of range";
    case ErrorCode::DurationMismatch: return "duration mismatch";
    case ErrorCode::NonPiecewiseConstant: return "non-piecewise-constant input";
    case ErrorCode::InadmissiblePair: return "inadmissible pair";
    case ErrorCode::OutsideConvexHull: return "value outside convex hull";
    case ErrorCode::SegmentNotExtreme: return "segment not extreme-valued";
    case ErrorCode::NonFiniteState: return "non-finite state";
    case ErrorCode::InsufficientLadder: return "insufficient dt ladder";
    case ErrorCode::ChainTooShallow: return "chain too shallow";
    case ErrorCode::DidNotConverge: return "did not converge";
    case ErrorCode::DependentBasis: return "dependent basis";
    case ErrorCode::EpsilonUnattainable: return "epsilon unattainable at resolution";
    case ErrorCode::Parse: return "parse error";
  }
  return "unknown error";
}

bool is_numerical(ErrorCode code) {
  return code == ErrorCode::NonFiniteState || code == ErrorCode::DidNotConverge;
}

}  // namespace vortctl
