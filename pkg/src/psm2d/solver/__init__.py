"""Variational solvers: radial minimization of I, constrained minimization of G, mountain pass for J."""
from .constrained import find_t0_on_H, minimize_on_H, retract_to_H
from .mountain import mountain_pass, mp_floor
from .outcome import (
    CONSTRAINED,
    MOUNTAIN_PASS,
    NEGATIVE_MINIMIZER,
    POSITIVE_CRITICAL,
    TRIVIAL,
    MountainPassState,
    SolveOutcome,
    SolverConfig,
)
from .radial import find_q_tilde, minimize_I_radial, radial_multistart, trial_family
from .spaces import HarmonicSpace, LatticeSpace, RadialSpace, make_space

__all__ = [
    "CONSTRAINED",
    "MOUNTAIN_PASS",
    "NEGATIVE_MINIMIZER",
    "POSITIVE_CRITICAL",
    "TRIVIAL",
    "SolverConfig",
    "SolveOutcome",
    "MountainPassState",
    "minimize_I_radial",
    "radial_multistart",
    "find_q_tilde",
    "trial_family",
    "minimize_on_H",
    "find_t0_on_H",
    "retract_to_H",
    "mountain_pass",
    "mp_floor",
    "make_space",
    "LatticeSpace",
    "RadialSpace",
    "HarmonicSpace",
]
