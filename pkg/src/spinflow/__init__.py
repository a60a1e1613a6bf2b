"""Finite-difference and Galerkin solvers for the Schroedinger map flow and
the Landau-Lifshitz flow on a box with Neumann boundary conditions, plus
diagnostics built from the flow's analytic identities."""

from .dynamics import SolverConfig, Trajectory, make_initial_data, run, step
from .grid import Grid

__all__ = ["Grid", "SolverConfig", "Trajectory", "make_initial_data", "run", "step"]
__version__ = "0.1.0"
