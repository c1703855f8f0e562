"""
cohom1 Solvers Package
The ODE system, the heuristic Taylor solver and the shooting problem.
"""

from .shooting import broyden_solve, fd_linearize, shoot_A, shoot_Omega
from .system import Params
from .taylor import propagate

__all__ = [
    "Params",
    "propagate",
    "shoot_A",
    "shoot_Omega",
    "broyden_solve",
    "fd_linearize",
]
