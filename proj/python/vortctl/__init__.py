"""Spectral Galerkin 2D vorticity simulator and control-synthesis engine."""

from ._core import (
    SpectralState,
    VortctlError,
    averaging_experiment,
    cascade_program,
    chattering_approximation,
    coverage_check,
    energy,
    enstrophy,
    find_generating_pair,
    free_run,
    inner,
    is_saturating_symmetric,
    l1_grid,
    next_level,
    nonlinear_term,
    project,
    random_decaying_state,
    random_hull_program,
    relaxation_distance,
    run_experiment,
    saturation_chain,
    simulate,
    sobolev_norm,
    steer_to_target,
    vector_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
