#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "vortctl/forcing.hpp"
#include "vortctl/integrator.hpp"
#include "vortctl/lattice.hpp"
#include "vortctl/spectral.hpp"

namespace vortctl::steering {

using forcing::ForcingProgram;
using integrator::IntegratorConfig;
using lattice::ModeIndex;
using lattice::ModeSet;
using lattice::SaturationChain;
using spectral::Channels;
using spectral::SimParams;
using spectral::SpectralState;

/// Coordinate projection onto a symmetric mode set (observed as real
/// channels), or projection onto the span of an orthonormal family
/// (observed as inner products <w, e_i>_0).
class Projection {
 public:
  /// Throws AsymmetricTarget.
  static Projection coordinate(ModeSet set);
  /// Throws InvalidArgument unless the family is orthonormal within 1e-10.
  static Projection subspace(std::vector<SpectralState> basis);

  bool is_coordinate() const { return basis_.empty(); }
  const ModeSet& modes() const { return set_; }
  const std::vector<SpectralState>& basis() const { return basis_; }
  std::size_t dimension() const;
  std::vector<double> apply(const SpectralState& s) const;
  /// Orthogonal projection of `s` onto the span (subspace kind only).
  SpectralState project(const SpectralState& s) const;

 private:
  ModeSet set_;
  std::vector<SpectralState> basis_;
};

struct SteeringConfig {
  double tau = 0.02;             ///< base-step duration
  double gamma = 2.0;            ///< amplitude margin factor, > 1
  double R = 0.5;                ///< target ball radius
  double omega = 400.0;          ///< cascade oscillation frequency
  double correction_tau = 0.0;   ///< 0 selects tau / 10
  int max_fp_iters = 20;
  double fp_tol = 1e-3;
  int chatter_windows = 1;       ///< L for the top-level chattering step
  std::vector<double> level_omegas;  ///< optional per-cascade frequencies, top level first
  IntegratorConfig integrator;
  int threads = 1;               ///< workers for coverage sweeps

  double effective_correction_tau() const { return correction_tau > 0.0 ? correction_tau : tau / 10.0; }
};

struct EndpointReport {
  std::vector<double> target;
  std::vector<double> achieved;
  double error_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  ForcingProgram program;
  double q_tail_growth = 0.0;  ///< sup_t ||Q_t||_0 - ||Q_0||_0, Q = unobserved modes
  std::vector<double> error_history;
  SpectralState final_state;
};

/// DidNotConverge carrying the best report found.
class SteeringFailure : public Error {
 public:
  SteeringFailure(const std::string& what, EndpointReport best)
      : Error(ErrorCode::DidNotConverge, what), report_(std::move(best)) {}
  const EndpointReport& report() const { return report_; }

 private:
  EndpointReport report_;
};

SpectralState endpoint_map(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                           const IntegratorConfig& config = {});

std::vector<double> observed_endpoint(const SpectralState& state0, const SimParams& params,
                                      const ForcingProgram& program, const Projection& proj,
                                      const IntegratorConfig& config = {});

/// Constant p / tau over [0, tau] on the real channels of `support`.
ForcingProgram base_step_program(const ModeSet& support, const std::vector<double>& p, double tau);

/// Constant (end - start) / tau over [0, tau] on the real channels of `support`.
ForcingProgram correction_program(const ModeSet& support, const std::vector<double>& start,
                                  const std::vector<double>& end, double tau);

/// Replaces the constant drive z on mode k by fast cosine forcing on an
/// admissible pair m + n = k: one segment of duration d becomes an even
/// number of one-period blocks at a frequency >= omega. Consecutive blocks
/// carry complex amplitudes (a_m, a_n) and (i a_m, -i a_n), so that
/// a_m a_n c = 2z holds on every block while the drive of the difference mode
/// m - n cancels in pairs. A zero drive yields a single zero segment. Throws
/// InvalidArgument when omega exceeds omega_cap; segments shorter than two
/// periods of omega become two single-period blocks at a higher frequency.
std::vector<forcing::ForcingSegment> cascade_segments(ModeIndex k, ModeIndex m, ModeIndex n, spectral::Complex z,
                                                      double duration, double omega, double omega_cap = 1e4);

/// Copies segments whose single active channel lies in `k_prev` and replaces
/// the others by cascade_segments on find_generating_pair(k, k_prev).
/// Throws SegmentNotExtreme or NoGeneratingPair.
ForcingProgram cascade_program(const ForcingProgram& extended, const ModeSet& k_prev, double omega,
                               double omega_cap = 1e4);

struct Synthesis {
  ForcingProgram program;
  SpectralState final_state;
  double tail_sup = 0.0;  ///< sup_t ||Q_t||_0 over the run
  int top_level = 1;      ///< M, the first chain level containing K_obs
};

/// Builds the program for top-level parameter vector `p` (channels of level
/// M) and simulates it. M = 1 gives the base step alone; M > 1 chatters and
/// cascades down to K^1 and appends the K^1 correction.
Synthesis synthesize_parameter(const std::vector<double>& p, const SaturationChain& chain, const ModeSet& k_obs,
                               const SpectralState& state0, const SimParams& params, const SteeringConfig& config);

/// First synthesis pass for `target` (observed channels of K_obs):
/// p = target - observed(state0) on the K_obs channels of the top level.
ForcingProgram synthesize(const std::vector<double>& target, const SaturationChain& chain, const ModeSet& k_obs,
                          const SpectralState& state0, const SimParams& params, const SteeringConfig& config);

/// Fixed-point refinement p <- p + (target - Phi(p)). Throws SteeringFailure.
EndpointReport steer_to_target(const std::vector<double>& target, const SaturationChain& chain, const ModeSet& k_obs,
                               const SpectralState& state0, const SimParams& params, const SteeringConfig& config);

/// sup over displacements p of ||obs(w_tau) - obs(w_0) - p|| for the base
/// step p / tau on the channels of k_obs.
double near_identity_defect(const ModeSet& k_obs, const std::vector<std::vector<double>>& displacements, double tau,
                            const SpectralState& state0, const SimParams& params,
                            const IntegratorConfig& config = {});

struct AveragingResult {
  std::vector<double> omegas;
  std::vector<double> deviations;  ///< D(omega)
  double reference_sup = 0.0;      ///< sup_t ||w_bar_t||_0
};

/// Cascade trajectory against the reference driven by constant A on Re q_k.
/// `samples` uniform instants over [0, T] enter the supremum.
AveragingResult averaging_experiment(ModeIndex k, std::pair<ModeIndex, ModeIndex> pair, double A,
                                     const std::vector<double>& omegas, double T, const SpectralState& state0,
                                     const SimParams& params, const IntegratorConfig& config = {},
                                     int samples = 400);

struct SubspaceSetup {
  Projection projection;                 ///< orthonormalized family e_i
  std::vector<SpectralState> truncated;  ///< e_bar_i, supported on S
  ModeSet support;                       ///< S
  double truncation_error = 0.0;         ///< max_i ||e_i - e_bar_i||_0
  double projection_defect = 0.0;        ///< max_i ||Pi^L e_bar_i - e_bar_i||_0
};

/// Throws DependentBasis or EpsilonUnattainable.
SubspaceSetup subspace_setup(const std::vector<SpectralState>& basis_raw, double epsilon);

/// Steers <w_T, e_i>_0 to `target` by steering the S-coordinates to a lift of
/// the target. q_tail_growth refers to modes outside S.
EndpointReport steer_in_projection(const std::vector<SpectralState>& basis_raw, const std::vector<double>& target,
                                   const SaturationChain& chain, const SpectralState& state0, const SimParams& params,
                                   const SteeringConfig& config, double epsilon);

struct RxProbeResult {
  std::vector<double> deltas;
  std::vector<double> omegas;         ///< delta^-2
  std::vector<double> rx_distances;   ///< measured relaxation distance to the base program
  std::vector<double> deviations;     ///< sup_t ||w_t - w_base_t||_0
};

/// Unforced base against the perturbation omega^{1/2} cos(omega t) on Re q_mode,
/// omega = delta^-2, over [0, T] from common initial data.
RxProbeResult rx_continuity_probe(ModeIndex mode, const std::vector<double>& deltas, double T,
                                  const SpectralState& state0, const SimParams& params,
                                  const IntegratorConfig& config = {}, int samples = 400);

/// Points of a uniform grid with `density` values per axis spanning [-r, r],
/// kept when their l1 norm is at most r. r = 0 gives the origin alone.
std::vector<std::vector<double>> l1_grid(std::size_t dimension, double r, int density);

struct CoverageResult {
  double fraction = 0.0;
  std::vector<std::vector<double>> targets;
  std::vector<double> errors;
  std::vector<int> iterations;
  std::vector<bool> converged;
};

/// Steers to every grid target observed(state0) + y, y in the l1 ball of
/// radius R/2, and reports the fraction reached within fp_tol.
CoverageResult coverage_check(const SaturationChain& chain, const ModeSet& k_obs, double R, int grid_density,
                              const SpectralState& state0, const SimParams& params, const SteeringConfig& config);

}  // namespace vortctl::steering
