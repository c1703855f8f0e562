"""
ODE System Module
The singular system eta' = (1/t) L eta + B(eta, eta) for two-summand
cohomogeneity-one Einstein metrics on spheres, with its conserved quantity
and the closed-form round solution.

Functions here are generic in the scalar type: they accept mpmath values,
Balls, Fractions or floats, since they only use +, -, * and division by
integers.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, List, Sequence

from cohom1.errors import DomainError
from cohom1.numerics.precision import context

logger = logging.getLogger(__name__)

State5 = List[Any]
Matrix = List[List[Fraction]]

DIM = 5


# =============================================================================
# Parameters
# =============================================================================

@dataclass(frozen=True)
class Params:
    """
    Dimensions (d1, d2) of the two sphere factors and the initial slope alpha.

    The Einstein constant is always lambda = d1 + d2. The mirrored system
    (evolving from the other singular orbit) is the same dataclass with d1, d2
    swapped and alpha replaced by omega.
    """

    d1: int
    d2: int
    alpha: Any = 1

    def __post_init__(self):
        if int(self.d1) != self.d1 or int(self.d2) != self.d2:
            raise DomainError(f"d1, d2 must be integers, got ({self.d1}, {self.d2})")
        if self.d1 < 2 or self.d2 < 2:
            raise DomainError(f"d1, d2 must be >= 2, got ({self.d1}, {self.d2})")

    @property
    def lam(self) -> int:
        return self.d1 + self.d2

    @property
    def dimension(self) -> int:
        """Dimension n of the sphere S^n."""
        return self.d1 + self.d2 + 1

    def with_alpha(self, alpha) -> "Params":
        return replace(self, alpha=alpha)

    def mirrored(self, omega) -> "Params":
        return Params(self.d2, self.d1, omega)

    def round_alpha(self, digits: int = 30):
        """Initial slope of the round metric, sqrt(d1 - 1)."""
        return context(digits).sqrt(self.d1 - 1)

    def initial_state(self, sqrt_lam=None) -> State5:
        """eta(0) = (0, 0, 0, alpha, sqrt(lambda))."""
        if sqrt_lam is None:
            sqrt_lam = context(30).sqrt(self.lam)
        return [0, 0, 0, self.alpha, sqrt_lam]


# =============================================================================
# Linear part
# =============================================================================

def matrix_L(p: Params) -> Matrix:
    """5x5 matrix L; only rows 2 and 3 are non-zero."""
    m = [[Fraction(0)] * DIM for _ in range(DIM)]
    m[1][1] = Fraction(-p.d2)
    m[2][1] = Fraction(2)
    m[2][2] = Fraction(-2)
    return m


def apply_L(p: Params, x: Sequence) -> State5:
    return [0 * x[0], -p.d2 * x[1], 2 * x[1] - 2 * x[2], 0 * x[3], 0 * x[4]]


def resolvent(p: Params, k: int) -> Matrix:
    """Closed form of (kI - L)^{-1} for k >= 1."""
    if k < 1:
        raise DomainError(f"resolvent needs k >= 1, got {k}")
    m = [[Fraction(0)] * DIM for _ in range(DIM)]
    m[0][0] = Fraction(1, k)
    m[1][1] = Fraction(1, k + p.d2)
    m[2][1] = Fraction(2, (k + 2) * (k + p.d2))
    m[2][2] = Fraction(1, k + 2)
    m[3][3] = Fraction(1, k)
    m[4][4] = Fraction(1, k)
    return m


def apply_resolvent(p: Params, k: int, x: Sequence) -> State5:
    """(kI - L)^{-1} x without forming the matrix."""
    a = x[1] / (k + p.d2)
    return [x[0] / k, a, (x[2] + 2 * a) / (k + 2), x[3] / k, x[4] / k]


def mat_vec(m: Matrix, x: Sequence) -> State5:
    return [sum((m[i][j] * x[j] for j in range(DIM) if m[i][j]), 0 * x[0]) for i in range(DIM)]


# =============================================================================
# Quadratic part
# =============================================================================

def bilinear_B(p: Params, x: Sequence, y: Sequence) -> State5:
    """Symmetric bilinear form B(x, y); the last two components are always 0."""
    d1, d2 = p.d1, p.d2
    b1 = -(x[1] * y[3] + x[3] * y[1] + x[0] * y[1] + x[1] * y[0]) / (2 * d1)
    b2 = (
        -(x[1] * y[2] + x[2] * y[1]) / 2
        + d1 * (x[0] * y[0] + x[3] * y[3] + x[0] * y[3] + x[3] * y[0])
        - d1 * x[4] * y[4]
    )
    b3 = (
        -x[2] * y[2] / d2
        + (x[1] * y[2] + x[2] * y[1]) / d2
        - x[1] * y[1] * (d1 + d2) / (d1 * d2)
        - x[4] * y[4]
    )
    zero = 0 * b1
    return [b1, b2, b3, zero, zero]


def rhs(p: Params, t, x: Sequence) -> State5:
    """eta' = (1/t) L eta + B(eta, eta) for t > 0."""
    if t == 0:
        raise DomainError("The right-hand side is singular at t = 0")
    lx = apply_L(p, x)
    bx = bilinear_B(p, x, x)
    return [lx[i] / t + bx[i] for i in range(DIM)]


def btermok_constant(p: Params, y: Sequence):
    """C(d1, d2, y) with |<x, B(x, y)>| <= C |x|^2."""
    d1, d2 = p.d1, p.d2
    return (
        abs(y[0]) * (d1 + Fraction(1, 4 * d1))
        + abs(y[1]) * (Fraction(1, 2 * d1) + Fraction(3, 2 * d2) + Fraction(1, 4))
        + abs(y[2]) * (Fraction(1, 2 * d2) + Fraction(1, 2))
        + abs(y[3]) * (d1 + Fraction(1, 4 * d1))
        + abs(y[4]) * Fraction(d1 + 1, 2)
    )


# =============================================================================
# Conserved quantity
# =============================================================================

def xyz(p: Params, t, s: Sequence):
    """(X, Y, Z) = (alpha + eta1, eta2, d2/t + eta3)."""
    if t <= 0:
        raise DomainError(f"XYZ variables need t > 0, got {t}")
    return s[3] + s[0], s[1], s[2] + p.d2 / t


def first_integral(p: Params, t, s: Sequence, w):
    """
    Value of d1 X^2 + d2 W^2 - (d1-1)Y^2/d1 - (d2-1)(Y-Z)^2/d2 - 2Y(Z-Y).

    Equals (d1 + d2 - 1) * lambda along exact solutions. W is not part of the
    eta state and must be supplied (see taylor.path_w or round_w).
    """
    d1, d2 = p.d1, p.d2
    x, y, z = xyz(p, t, s)
    if x <= 0:
        raise DomainError("X must be positive")
    return (
        d1 * x * x
        + d2 * w * w
        - (d1 - 1) * y * y / d1
        - (d2 - 1) * (y - z) * (y - z) / d2
        - 2 * y * (z - y)
    )


def integral_target(p: Params) -> int:
    return (p.d1 + p.d2 - 1) * p.lam


def recover_w(p: Params, t, s: Sequence, digits: int = 30):
    """W recovered from the conserved quantity, taking the positive root."""
    d1, d2 = p.d1, p.d2
    x, y, z = xyz(p, t, s)
    arg = (
        integral_target(p)
        - d1 * x * x
        + (d1 - 1) * y * y / d1
        + (d2 - 1) * (y - z) * (y - z) / d2
        + 2 * y * (z - y)
    ) / d2
    if arg <= 0:
        raise DomainError(f"W^2 = {arg} is not positive; outside the physical region")
    return context(digits).sqrt(arg)


def round_w(p: Params, t, digits: int = 30):
    """W = sqrt(d2 - 1) / sin t for the round metric."""
    ctx = context(digits)
    return ctx.sqrt(p.d2 - 1) / ctx.sin(t)


def round_oracle(p: Params, t, digits: int = 30) -> State5:
    """
    Closed-form eta(t) of the round metric (f1 = cos t, f2 = sin t).

    Args:
        p: Parameters; alpha is ignored and taken to be sqrt(d1 - 1)
        t: Time in (0, pi/2)
        digits: Decimal digits of the evaluation

    Returns:
        (sqrt(d1-1)(sec t - 1), -d1 tan t, -d1 tan t + d2 cot t - d2/t, sqrt(d1-1), sqrt(lambda))
    """
    ctx = context(digits)
    t = ctx.mpf(t)
    if not 0 < t < ctx.pi / 2:
        raise DomainError(f"round_oracle needs t in (0, pi/2), got {t}")
    root = ctx.sqrt(p.d1 - 1)
    tan = ctx.tan(t)
    return [
        root * (ctx.sec(t) - 1),
        -p.d1 * tan,
        -p.d1 * tan + p.d2 * ctx.cot(t) - p.d2 / t,
        root,
        ctx.sqrt(p.lam),
    ]


def round_stopping_time(p: Params, digits: int = 30):
    """Zero of Z = -d1 tan t + d2 cot t, i.e. arctan(sqrt(d2/d1))."""
    ctx = context(digits)
    return ctx.atan(ctx.sqrt(ctx.mpf(p.d2) / p.d1))
