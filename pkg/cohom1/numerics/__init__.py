"""
cohom1 Numerics Package
Directed-rounding balls and the Chebyshev series algebra.
"""

from .chebyshev import ChebSeries, ChebVec
from .precision import Ball

__all__ = [
    "Ball",
    "ChebSeries",
    "ChebVec",
]
