"""Stratified steady water waves in height-function coordinates.

Laminar and wave solvers, flow diagnostics, principal-eigenvalue tools for
the reflected-difference operator, symmetry certificates and a numerical
moving-plane sweep.
"""
__version__ = "0.1.0"

from .core_fields import Grid, ScalarField, make_grid
from .errors import StratWaveError
from .profiles import StreamlineProfiles
from .laminar import LaminarFlow, solve_laminar
from .wave_solver import SolverParams, WaveSolution, continue_from_laminar, newton_solve

__all__ = ["Grid", "ScalarField", "make_grid", "StratWaveError", "StreamlineProfiles",
           "LaminarFlow", "solve_laminar", "SolverParams", "WaveSolution",
           "continue_from_laminar", "newton_solve", "__version__"]
