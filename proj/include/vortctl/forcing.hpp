#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "vortctl/spectral.hpp"

namespace vortctl::forcing {

using lattice::ModeIndex;
using lattice::ModeSet;
using spectral::Channels;
using spectral::Complex;
using spectral::ModeField;

struct Zero {};

/// Constant vector; `values` lists both k and -k.
struct Constant {
  ModeField values;
};

/// v_m(t) = amp * omega * cos(omega (t - start) + phase) on `mode`, and the
/// conjugate on -mode.
struct OscTerm {
  ModeIndex mode;
  Complex amp;
};

struct Oscillatory {
  std::vector<OscTerm> terms;
  double omega = 0.0;
  double phase = 0.0;
};

using Payload = std::variant<Zero, Constant, Oscillatory>;

struct ForcingSegment {
  double duration = 0.0;
  Payload payload;

  static ForcingSegment zero(double duration);
  static ForcingSegment constant(double duration, ModeField values);
  static ForcingSegment oscillatory(double duration, std::vector<OscTerm> terms, double omega, double phase = 0.0);

  bool is_constant() const { return !std::holds_alternative<Oscillatory>(payload); }
  /// Supremum over the segment of the l1 norm of the real channel vector.
  double max_l1() const;
};

/// Piecewise-in-time forcing over a symmetric support. Segments are
/// left-closed; the final instant belongs to the last segment.
class ForcingProgram {
 public:
  ForcingProgram() = default;
  /// Throws AsymmetricSet for an asymmetric support, AsymmetricForcing for
  /// asymmetric constant values and InvalidArgument for payload modes outside
  /// the support or non-positive durations.
  ForcingProgram(ModeSet support, std::vector<ForcingSegment> segments);

  const ModeSet& support() const { return support_; }
  const std::vector<ForcingSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  double total_duration() const { return starts_.empty() ? 0.0 : starts_.back(); }
  double start_of(std::size_t i) const { return starts_[i]; }
  double end_of(std::size_t i) const { return starts_[i + 1]; }
  /// Index of the segment active at t. Throws TimeOutOfRange.
  std::size_t segment_at(double t) const;
  bool is_piecewise_constant() const;

  void append(ForcingSegment seg);
  /// `this` followed by `tail`; the support becomes the union.
  ForcingProgram then(const ForcingProgram& tail) const;
  /// Same segments over a larger support.
  ForcingProgram with_support(const ModeSet& larger) const;

 private:
  void validate(const ForcingSegment& seg) const;

  ModeSet support_;
  std::vector<ForcingSegment> segments_;
  std::vector<double> starts_;  // size() + 1 entries once non-empty
};

ModeField evaluate(const ForcingProgram& p, double t);
/// Exact integral of the program over [0, t].
ModeField primitive(const ForcingProgram& p, double t);

/// Primitive in real channel coordinates with cached segment offsets.
class PrimitiveEvaluator {
 public:
  PrimitiveEvaluator(const ForcingProgram& p, const Channels& channels);
  std::vector<double> at(double t) const;
  void at_into(double t, std::vector<double>& out) const;

 private:
  void segment_into(std::size_t i, double local, std::vector<double>& out) const;

  const ForcingProgram* program_;
  const Channels* channels_;
  std::vector<std::vector<double>> offsets_;  // primitive at each segment start
};

/// Converts a mode field into channels, throwing if it has modes outside them.
std::vector<double> to_channels(const Channels& ch, const ModeField& f);

/// max_t ||V_f(t) - V_g(t)|| in the Euclidean norm over real channels of the
/// joint support. `grid` is the minimum number of samples over [0, T].
double relaxation_distance(const ForcingProgram& f, const ForcingProgram& g, int grid = 256);

/// Measure of {t : f(t) != g(t)} for piecewise-constant programs.
double delta_distance(const ForcingProgram& f, const ForcingProgram& g);

/// Real amplitudes with |A_m| = |A_n| and A_m A_n (m^n)(|m|^-2 - |n|^-2) = 2A.
/// A_m >= 0. Throws InadmissiblePair.
std::pair<double, double> oscillatory_amplitudes(ModeIndex k, ModeIndex m, ModeIndex n, double A);

/// E^A = {±A e_j : j < dimension} over real channels.
struct ExtremeSet {
  double amplitude = 1.0;
  std::size_t dimension = 1;

  std::size_t cardinality() const { return 2 * dimension; }
  bool in_hull(std::span<const double> v, double rel_tol = 1e-9) const;
  bool is_extreme(std::span<const double> v, double rel_tol = 1e-9) const;
};

/// Constant program on the real channels of `support`.
ForcingProgram constant_program(const ModeSet& support, std::span<const double> channel_values, double duration);

/// Piecewise-constant program with `pieces` segments of random lengths, each
/// value uniform in the l1 ball of radius A over the real channels.
ForcingProgram random_hull_program(const ModeSet& support, double A, double T, int pieces, std::uint64_t seed);

/// Extreme-valued piecewise-constant approximation on L equal windows. The
/// zero part of each window's convex decomposition is spent as +A then -A on
/// `zero_channel`. Throws OutsideConvexHull.
ForcingProgram chattering_approximation(const ForcingProgram& v, double A, int L, std::size_t zero_channel = 0);

}  // namespace vortctl::forcing
