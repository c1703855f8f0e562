"""
cohom1 - Rigorous numerics for cohomogeneity-one Einstein metrics
Heuristic Taylor solves, Chebyshev ball arithmetic and a posteriori
verification of a non-round Einstein metric on S^12.
"""

__version__ = "1.0.0"
