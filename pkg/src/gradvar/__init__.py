"""Gradient-variance landscape analysis for QUBO problems.

Modules: ``core`` (instances and energies), ``generators`` (benchmark
families), ``landscape`` (the variance metric and exhaustive scans),
``solvers``, ``reformulate``, ``advisor`` and ``bench``.
"""

from .core import QuboInstance, evaluate, flip_delta, load_instance, save_instance
from .landscape import LandscapeReport, gradient_variance, landscape_scan
from .solvers import SolverOutcome, solve_brute_force, solve_sa, solve_sgd, solve_sqa
from .reformulate import reformulate, preserves_semantics
from .advisor import recommend, fit_wkb

__version__ = "0.1.0"

__all__ = [
    "QuboInstance", "evaluate", "flip_delta", "load_instance", "save_instance",
    "LandscapeReport", "gradient_variance", "landscape_scan",
    "SolverOutcome", "solve_brute_force", "solve_sa", "solve_sgd", "solve_sqa",
    "reformulate", "preserves_semantics", "recommend", "fit_wkb",
]
