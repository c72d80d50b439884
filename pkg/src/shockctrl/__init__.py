"""Spectral analysis and boundary null-control for the shock-linearized
advection-diffusion equation in the vanishing-viscosity regime."""

from .params import ProblemParams
from .spectral import (EigenMode, eval_eigenfunction, norm_ratio,
                       solve_lambda0, solve_lambda_k, spectrum)
from .biorth import (BiorthFamily, RescaledSpectrum, build_family,
                     gram_moment_solve, rescale)
from .multiplier import Multiplier, choose_multiplier, h_beta
from .control import (ControlSignal, ModeState, limit_control, mode_update,
                      phase1_control, phase2_coefficients,
                      project_onto_modes, state_at_tau, synthesize)
from .pde import (Grid, InviscidState, SimulationResult, limit_solve,
                  make_grid, shock_profile, simulate, viscous_vs_limit)
from .bounds import CostSweep, LowerBoundReport, empirical_cost, lower_bound_rate, sweep

__version__ = "0.1.0"

__all__ = [
    "ProblemParams", "EigenMode", "spectrum", "solve_lambda0", "solve_lambda_k",
    "eval_eigenfunction", "norm_ratio", "RescaledSpectrum", "rescale",
    "Multiplier", "choose_multiplier", "h_beta", "BiorthFamily", "build_family",
    "gram_moment_solve", "ControlSignal", "ModeState", "project_onto_modes",
    "mode_update", "phase1_control", "state_at_tau", "phase2_coefficients",
    "synthesize", "limit_control", "Grid", "make_grid", "shock_profile",
    "simulate", "SimulationResult", "limit_solve", "InviscidState",
    "viscous_vs_limit", "LowerBoundReport", "lower_bound_rate",
    "empirical_cost", "CostSweep", "sweep",
]
