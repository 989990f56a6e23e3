#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "vortctl/forcing.hpp"
#include "vortctl/spectral.hpp"

namespace vortctl::integrator {

using forcing::ForcingProgram;
using spectral::SimParams;
using spectral::SpectralState;

struct IntegratorConfig {
  double dt_base = 1e-3;
  int oscillation_resolution = 40;  ///< steps per period on oscillatory segments
  int record_stride = 1;
  double omega_cap = 1e4;  ///< limit for oscillatory segments longer than one period
  double blowup_threshold = 1e12;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SpectralState> states;
  std::shared_ptr<const ForcingProgram> forcing_ref;

  const SpectralState& final_state() const { return states.back(); }
};

/// One integrating-factor RK4 step. [t, t+dt] must lie inside one segment of
/// `program` (an empty program means zero forcing). Throws NonFiniteState.
SpectralState step(const SpectralState& state, double t, double dt, const SimParams& params,
                   const ForcingProgram& program, const IntegratorConfig& config = {});

/// Called after every step with the current time and state (also once at t=0).
/// `boundary` marks segment end instants.
using StepObserver = std::function<void(double t, const SpectralState& s, bool boundary)>;

/// Advances `state0` over the whole program; returns the final state.
SpectralState advance(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                      const IntegratorConfig& config = {}, const StepObserver& observer = {});

/// Advances and records every record_stride-th step plus every segment boundary.
Trajectory integrate(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                     const IntegratorConfig& config = {});

/// States at the given nondecreasing instants in [0, T], from auxiliary
/// partial steps off the regular step sequence.
std::vector<SpectralState> sample(const SpectralState& state0, const SimParams& params, const ForcingProgram& program,
                                  const std::vector<double>& times, const IntegratorConfig& config = {});

/// Unforced run of fixed duration.
SpectralState free_run(const SpectralState& state0, const SimParams& params, double duration,
                       const IntegratorConfig& config = {});

struct ConvergenceReport {
  double order = 0.0;
  bool indeterminate = false;  ///< errors at round-off level
  std::vector<double> dts;
  std::vector<double> errors;  ///< H0 error of the final state against the dts.back()/4 reference
};

/// Self-convergence study over a decreasing ladder of >= 3 base steps.
/// Throws InsufficientLadder.
ConvergenceReport convergence_order(const SpectralState& state0, const SimParams& params,
                                    const ForcingProgram& program, const std::vector<double>& dts,
                                    const IntegratorConfig& config = {});

}  // namespace vortctl::integrator
