"""
Chebyshev Module
Chebyshev series on [0, T] with ball coefficients and a closed differential
algebra: product, antiderivative, derivative, Cesaro mean, evaluation and
Sobolev norms. Every output encloses the exact result for all inputs inside
the input balls.

Series are stored in standard form f = sum a_k T_k(2t/T - 1); the
half-c0 convention (c_0 = 2 a_0) is used only at the interface.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from mpmath import libmp

from cohom1.errors import DomainError
from cohom1.numerics.precision import (
    RAD_ZERO,
    Ball,
    ball_sqrt_clamped,
    ball_to_pair,
    ball_from_pair,
    context,
    digits_to_bits,
    rad_abs,
    rad_div,
    rad_from,
    rad_max,
    rad_mul,
    rad_slack,
    rad_sum,
    rad_unit,
    to_decimal,
    from_decimal,
)
from cohom1.solvers.system import Params, bilinear_B

logger = logging.getLogger(__name__)


# =============================================================================
# Series
# =============================================================================

class ChebSeries:
    """
    Chebyshev series on [0, T] with midpoint coefficients at `digits`
    decimal digits and per-coefficient radii (upward-rounded).
    """

    __slots__ = ("T", "mids", "rads", "digits")

    def __init__(self, T, mids: Sequence, rads: Optional[Sequence] = None, digits: int = 30):
        ctx = context(digits)
        self.digits = int(digits)
        self.T = ctx.convert(T)
        if self.T <= 0:
            raise DomainError("Chebyshev domain length must be positive")
        self.mids = [ctx.convert(m) for m in mids] or [ctx.zero]
        self.rads = list(rads) if rads is not None else [RAD_ZERO] * len(self.mids)
        if len(self.rads) != len(self.mids):
            raise DomainError("mids and rads differ in length")

    @classmethod
    def _make(cls, T, mids, rads, digits) -> "ChebSeries":
        out = cls.__new__(cls)
        out.T, out.mids, out.rads, out.digits = T, mids, rads, digits
        return out

    @classmethod
    def from_coeffs(cls, T, coeffs: Sequence, digits: int = 30) -> "ChebSeries":
        """Build from c_0..c_{N-1} in the half-c0 convention (numbers or Balls)."""
        prec = digits_to_bits(digits)
        balls = [c if isinstance(c, Ball) else Ball.exact(c, prec) for c in coeffs]
        if balls:
            first = balls[0]
            balls[0] = Ball(libmp.mpf_shift(first.raw_mid, -1), libmp.mpf_shift(first.raw_rad, -1), prec)
        return cls(T, [b.mid for b in balls], [b.raw_rad for b in balls], digits)

    @classmethod
    def constant(cls, T, value, digits: int = 30) -> "ChebSeries":
        prec = digits_to_bits(digits)
        ball = value if isinstance(value, Ball) else Ball.exact(value, prec)
        return cls(T, [ball.mid], [ball.raw_rad], digits)

    @classmethod
    def identity(cls, T, digits: int = 30) -> "ChebSeries":
        """The function t on [0, T]: (T/2)(T_1 + T_0)."""
        ctx = context(digits)
        half = ctx.convert(T) / 2
        return cls(T, [half, half], None, digits)

    # ---------------------------
    # Accessors
    # ---------------------------

    @property
    def ctx(self):
        return context(self.digits)

    @property
    def prec(self) -> int:
        return self.ctx.prec

    @property
    def N(self) -> int:
        return len(self.mids)

    def ball(self, k: int) -> Ball:
        """Standard-form coefficient a_k as a Ball."""
        if k >= len(self.mids):
            return Ball.exact(0, self.prec)
        return Ball(self.mids[k]._mpf_, self.rads[k], self.prec)

    @property
    def coeffs(self) -> List[Ball]:
        """Coefficients c_k in the half-c0 convention."""
        balls = [self.ball(k) for k in range(self.N)]
        first = balls[0]
        balls[0] = Ball(libmp.mpf_shift(first.raw_mid, 1), libmp.mpf_shift(first.raw_rad, 1), self.prec)
        return balls

    def radius_l1(self):
        return rad_sum(self.rads)

    def __repr__(self) -> str:
        return f"ChebSeries(T={float(self.T):.6f}, N={self.N}, digits={self.digits})"

    # ---------------------------
    # Operators
    # ---------------------------

    def __add__(self, other):
        if isinstance(other, ChebSeries):
            return cheb_add(self, other)
        return cheb_add(self, ChebSeries.constant(self.T, other, self.digits))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ChebSeries):
            return cheb_sub(self, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ChebSeries._make(self.T, [-m for m in self.mids], list(self.rads), self.digits)

    def __mul__(self, other):
        if isinstance(other, ChebSeries):
            return cheb_mul(self, other)
        return cheb_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, int):
            return cheb_div_int(self, other)
        if isinstance(other, Fraction):
            return cheb_scale(self, 1 / other)
        return cheb_scale(self, Ball.exact(1, self.prec) / other)


def _check_pair(a: ChebSeries, b: ChebSeries) -> None:
    if a.T != b.T:
        raise DomainError(f"Series live on different domains [0,{a.T}] and [0,{b.T}]")


def _digits_of(a: ChebSeries, b: ChebSeries) -> int:
    return max(a.digits, b.digits)


# =============================================================================
# Linear operations
# =============================================================================

def cheb_add(a: ChebSeries, b: ChebSeries) -> ChebSeries:
    _check_pair(a, b)
    digits = _digits_of(a, b)
    ctx = context(digits)
    prec = ctx.prec
    n = max(a.N, b.N)
    mids, rads = [], []
    for k in range(n):
        if k < a.N and k < b.N:
            m = ctx.fadd(a.mids[k], b.mids[k])
            r = rad_sum((a.rads[k], b.rads[k], rad_slack(m, prec)))
        elif k < a.N:
            m, r = ctx.convert(a.mids[k]), a.rads[k]
        else:
            m, r = ctx.convert(b.mids[k]), b.rads[k]
        mids.append(m)
        rads.append(r)
    return ChebSeries._make(a.T, mids, rads, digits)


def cheb_sub(a: ChebSeries, b: ChebSeries) -> ChebSeries:
    return cheb_add(a, -b)


def cheb_scale(a: ChebSeries, s) -> ChebSeries:
    """Multiply by a scalar (number or Ball)."""
    ctx = a.ctx
    prec = ctx.prec
    s = s if isinstance(s, Ball) else Ball.exact(s, prec)
    sm = s.mid
    s_abs = rad_abs(s.raw_mid)
    mids, rads = [], []
    for m, r in zip(a.mids, a.rads):
        out = m * sm
        mids.append(out)
        rads.append(rad_sum((rad_mul(s_abs, r), rad_mul(rad_abs(m), s.raw_rad), rad_mul(r, s.raw_rad), rad_slack(out, prec))))
    return ChebSeries._make(a.T, mids, rads, a.digits)


def cheb_div_int(a: ChebSeries, n: int) -> ChebSeries:
    if n == 0:
        raise DomainError("Division of a series by zero")
    prec = a.prec
    denom = libmp.from_int(abs(n))
    mids = [m / n for m in a.mids]
    rads = [rad_sum((rad_div(r, denom), rad_slack(m, prec))) for r, m in zip(a.rads, mids)]
    return ChebSeries._make(a.T, mids, rads, a.digits)


# =============================================================================
# Product
# =============================================================================

def cheb_mul(a: ChebSeries, b: ChebSeries) -> ChebSeries:
    """
    Full product using T_m T_n = (T_{m+n} + T_{|m-n|}) / 2, no truncation.

    Input radii and rounding are covered by one uniform radius per output
    coefficient: every input coefficient enters each output coefficient with
    total weight at most 3/2.
    """
    _check_pair(a, b)
    digits = _digits_of(a, b)
    ctx = context(digits)
    prec = ctx.prec
    A = [ctx.convert(m) for m in a.mids]
    B = [ctx.convert(m) for m in b.mids]
    na, nb = len(A), len(B)
    n = na + nb - 1
    fdot = ctx.fdot
    mids = []
    for k in range(n):
        lo, hi = max(0, k - nb + 1), min(k, na - 1)
        total = fdot(A[lo:hi + 1], B[k - hi:k - lo + 1][::-1]) if lo <= hi else ctx.zero
        if k == 0:
            length = min(na, nb)
            total = total + fdot(A[:length], B[:length])
        else:
            l1 = min(na, nb - k)
            if l1 > 0:
                total = total + fdot(A[:l1], B[k:k + l1])
            l2 = min(na - k, nb)
            if l2 > 0:
                total = total + fdot(A[k:k + l2], B[:l2])
        mids.append(total / 2)

    abs_a = rad_sum(rad_abs(m) for m in A)
    abs_b = rad_sum(rad_abs(m) for m in B)
    max_ra, max_rb = rad_max(a.rads), rad_max(b.rads)
    spread = rad_sum((rad_mul(abs_a, max_rb), rad_mul(abs_b, max_ra), rad_mul(rad_sum(a.rads), max_rb)))
    gamma = rad_mul(rad_from(n + 4), rad_unit(prec))
    uniform = rad_sum((rad_mul(rad_from(2), spread), rad_mul(gamma, rad_mul(abs_a, abs_b))))
    return ChebSeries._make(a.T, mids, [uniform] * n, digits)


# =============================================================================
# Calculus
# =============================================================================

def cheb_integrate(a: ChebSeries) -> ChebSeries:
    """Antiderivative vanishing at t = 0 (F_k = (c_{k-1} - c_{k+1}) / 2k, scaled by T/2)."""
    ctx = a.ctx
    prec = ctx.prec
    A, R = a.mids, a.rads
    n = a.N
    half_T = a.T / 2
    h_rad = rad_abs(half_T)
    three_units = rad_mul(rad_from(3), rad_unit(prec))

    def coef(k):
        return A[k] if k < n else ctx.zero

    def rcoef(k):
        return R[k] if k < n else RAD_ZERO

    mids = [ctx.zero]
    rads = [RAD_ZERO]
    for k in range(1, n + 1):
        if k == 1:
            m = (coef(0) - coef(2) / 2) * half_T
            r = rad_sum((R[0], libmp.mpf_shift(rcoef(2), -1)))
        else:
            m = (coef(k - 1) - coef(k + 1)) / (2 * k) * half_T
            r = rad_div(rad_sum((rcoef(k - 1), rcoef(k + 1))), libmp.from_int(2 * k))
        mids.append(m)
        rads.append(rad_sum((rad_mul(r, h_rad), rad_mul(three_units, rad_abs(m)))))
    alternating = [m if k % 2 == 0 else -m for k, m in enumerate(mids)]
    mids[0] = -ctx.fsum(alternating[1:])
    rads[0] = rad_sum((rad_sum(rads[1:]), rad_mul(rad_from(2), rad_slack(mids[0], prec)), rad_mul(rad_from(n + 2), rad_mul(rad_unit(prec), rad_sum(rad_abs(m) for m in mids[1:])))))
    return ChebSeries._make(a.T, mids, rads, a.digits)


def cheb_diff(a: ChebSeries) -> ChebSeries:
    """Derivative via d_{k-1} = d_{k+1} + 2k c_k, scaled by the ball 2/T."""
    ctx = a.ctx
    prec = ctx.prec
    n = a.N
    if n <= 1:
        return ChebSeries._make(a.T, [ctx.zero], [RAD_ZERO], a.digits)
    unit = rad_unit(prec)
    c = list(a.mids)
    rc = list(a.rads)
    c[0] = c[0] * 2
    rc[0] = libmp.mpf_shift(rc[0], 1)
    d = [ctx.zero] * (n + 1)
    rd = [RAD_ZERO] * (n + 1)
    for k in range(n - 1, 0, -1):
        term = 2 * k * c[k]
        d[k - 1] = d[k + 1] + term
        rd[k - 1] = rad_sum((
            rd[k + 1],
            rad_mul(rad_from(2 * k), rc[k]),
            rad_mul(unit, rad_sum((rad_abs(d[k - 1]), rad_abs(term)))),
        ))
    d = d[: n - 1]
    rd = rd[: n - 1]
    d[0] = d[0] / 2
    rd[0] = libmp.mpf_shift(rd[0], -1)
    scale = Ball.exact(2, prec) / Ball(a.T._mpf_, RAD_ZERO, prec)
    return cheb_scale(ChebSeries._make(a.T, d, rd, a.digits), scale)


@lru_cache(maxsize=None)
def cesaro_matrix(n: int) -> Tuple[Tuple[Fraction, ...], ...]:
    """
    Exact rational matrix M with C_j = sum_i M[i][j] T_i, where
    C_j(x) = (1/(x+1)) integral_{-1}^{x} T_j.

    Built from D_n = (T_n - T_n(-1)) / (x+1), which satisfies
    D_0 = 0, D_1 = 1, D_n = 2 T_{n-1} - 2 D_{n-1} - D_{n-2}.
    """
    size = n + 2
    D: List[List[Fraction]] = [[Fraction(0)] * size for _ in range(size)]
    if size > 1:
        D[1][0] = Fraction(1)
    for m in range(2, size):
        for i in range(size):
            D[m][i] = -2 * D[m - 1][i] - D[m - 2][i]
        D[m][m - 1] += 2
    M = [[Fraction(0)] * n for _ in range(n)]
    for j in range(n):
        if j == 0:
            M[0][0] = Fraction(1)
        elif j == 1:
            M[0][1] = Fraction(-1, 2)
            M[1][1] = Fraction(1, 2)
        else:
            for i in range(n):
                M[i][j] = D[j + 1][i] / (2 * (j + 1)) - D[j - 1][i] / (2 * (j - 1))
    return tuple(tuple(row) for row in M)


@lru_cache(maxsize=None)
def _cesaro_numeric(n: int, digits: int):
    ctx = context(digits)
    M = cesaro_matrix(n)
    rows = [[ctx.mpf(v.numerator) / v.denominator for v in row] for row in M]
    row_abs = [rad_from(sum(abs(v) for v in row)) for row in M]
    return rows, row_abs


def cesaro_mean(a: ChebSeries) -> ChebSeries:
    """t -> (1/t) integral_0^t a, which in mapped coordinates does not depend on T."""
    ctx = a.ctx
    prec = ctx.prec
    n = a.N
    rows, row_abs = _cesaro_numeric(n, a.digits)
    mids = [ctx.fdot(rows[i][i:], a.mids[i:]) for i in range(n)]
    max_mid = rad_max(rad_abs(m) for m in a.mids)
    noise = rad_sum((rad_max(a.rads), rad_mul(rad_mul(rad_from(n + 4), rad_unit(prec)), max_mid)))
    rads = [rad_sum((rad_mul(row_abs[i], noise), rad_slack(mids[i], prec))) for i in range(n)]
    return ChebSeries._make(a.T, mids, rads, a.digits)


# =============================================================================
# Evaluation
# =============================================================================

def _as_ball(t, prec: int) -> Ball:
    return t if isinstance(t, Ball) else Ball.exact(t, prec)


def cheb_eval(a: ChebSeries, t) -> Ball:
    """
    Enclosure of a(t) by Clenshaw's recurrence on the midpoints plus the sum
    of coefficient radii (|T_k| <= 1 on the domain).
    """
    prec = a.prec
    tb = _as_ball(t, prec)
    T_ball = Ball(a.T._mpf_, RAD_ZERO, prec)
    if tb.lower() < 0 or tb.upper() > a.T:
        raise DomainError(f"t = {tb} outside [0, {float(a.T)}]")
    x = tb * 2 / T_ball - 1
    two_x = x * 2
    zero = Ball.exact(0, prec)
    b1, b2 = zero, zero
    for k in range(a.N - 1, 0, -1):
        b1, b2 = Ball(a.mids[k]._mpf_, RAD_ZERO, prec) + two_x * b1 - b2, b1
    value = Ball(a.mids[0]._mpf_, RAD_ZERO, prec) + x * b1 - b2
    return Ball(value.raw_mid, rad_sum((value.raw_rad, a.radius_l1())), prec)


# =============================================================================
# Fitting
# =============================================================================

@lru_cache(maxsize=32)
def _cos_table(N: int, digits: int) -> Tuple[Any, ...]:
    """cos(pi m / 2N) for m = 0..4N-1."""
    ctx = context(digits)
    return tuple(ctx.cospi(ctx.mpf(m) / (2 * N)) for m in range(4 * N))


def nodes(N: int, T, digits: int = 30) -> List[Any]:
    """Zeros of T_N mapped to [0, T], t_j = T (cos(pi (j - 1/2) / N) + 1) / 2."""
    if N < 1:
        raise DomainError("nodes needs N >= 1")
    T = context(digits).convert(T)
    table = _cos_table(N, digits)
    return [T * (table[2 * j - 1] + 1) / 2 for j in range(1, N + 1)]


def fit_values(values: Sequence, T, digits: int = 30) -> ChebSeries:
    """
    Interpolant through samples taken at nodes(len(values), T):
    c_k = (2/N) sum_j f(t_j) cos(pi k (j - 1/2) / N).

    The balls enclose the exact transform of the sampled values; the samples
    themselves carry no rigor.
    """
    N = len(values)
    if N < 1:
        raise DomainError("fit needs N >= 1")
    ctx = context(digits)
    T = ctx.convert(T)
    prec = ctx.prec
    table = _cos_table(N, digits)
    values = [ctx.convert(v) for v in values]
    mids = []
    for k in range(N):
        weights = [table[(k * (2 * j - 1)) % (4 * N)] for j in range(1, N + 1)]
        mids.append(ctx.fdot(weights, values) * 2 / N)
    mids[0] = mids[0] / 2
    mass = rad_div(rad_mul(rad_from(2), rad_sum(rad_abs(v) for v in values)), libmp.from_int(N))
    uniform = rad_mul(mass, rad_mul(rad_from(N + 4), rad_mul(rad_from(2), rad_unit(prec))))
    series = ChebSeries._make(T, mids, [uniform] * N, digits)
    logger.debug(f"[CHEB] fit N={N} T={float(T):.6f} tail={float(tail_max(series)):.3e}")
    return series


def fit(f: Callable[[Any], Any], N: int, T, digits: int = 30) -> ChebSeries:
    """Interpolant of f at the N Chebyshev nodes of [0, T]."""
    return fit_values([f(t) for t in nodes(N, T, digits)], T, digits)


def fit_vec(f: Callable[[Any], Sequence], N: int, T, digits: int = 30, dim: int = 5) -> "ChebVec":
    """Componentwise interpolant of a vector-valued f, sampling f once per node."""
    samples = [list(f(t)) for t in nodes(N, T, digits)]
    return ChebVec([fit_values([row[i] for row in samples], T, digits) for i in range(dim)])


def tail_max(a: ChebSeries):
    """max |a_k| over the last 10% of coefficients (fit-quality diagnostic)."""
    count = max(1, a.N // 10)
    return max(abs(m) for m in a.mids[-count:])


def sup_bound(a: ChebSeries) -> Ball:
    """Crude rigorous bound sum |a_k| + radii of the sup norm on the domain."""
    prec = a.prec
    total = rad_sum([rad_abs(m) for m in a.mids] + list(a.rads))
    return Ball(total, RAD_ZERO, prec)


# =============================================================================
# Vectors
# =============================================================================

class ChebVec:
    """Five Chebyshev series sharing one domain."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[ChebSeries]):
        components = list(components)
        if not components:
            raise DomainError("ChebVec needs components")
        T = components[0].T
        for c in components[1:]:
            if c.T != T:
                raise DomainError("ChebVec components must share a domain")
        self.components = components

    @property
    def T(self):
        return self.components[0].T

    @property
    def digits(self) -> int:
        return max(c.digits for c in self.components)

    def __getitem__(self, i: int) -> ChebSeries:
        return self.components[i]

    def __iter__(self) -> Iterator[ChebSeries]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def map(self, fn: Callable[[ChebSeries], ChebSeries]) -> "ChebVec":
        return ChebVec([fn(c) for c in self.components])

    def __add__(self, other: "ChebVec") -> "ChebVec":
        return ChebVec([a + b for a, b in zip(self, other)])

    def __sub__(self, other: "ChebVec") -> "ChebVec":
        return ChebVec([a - b for a, b in zip(self, other)])

    def __neg__(self) -> "ChebVec":
        return self.map(lambda c: -c)

    def scale(self, s) -> "ChebVec":
        return self.map(lambda c: cheb_scale(c, s))


def cheb_bilinear(p: Params, x: ChebVec, y: ChebVec) -> ChebVec:
    """B(x, y) evaluated componentwise in the ball algebra."""
    return ChebVec(bilinear_B(p, list(x), list(y)))


# =============================================================================
# Norms
# =============================================================================

def sobolev_terms(series: Sequence[ChebSeries], k: int, t_end) -> List[Ball]:
    """
    [I_0, ..., I_k] with I_j = sum over components of integral_0^t_end (f^(j))^2.
    """
    if not 0 <= k <= 3:
        raise DomainError(f"Sobolev order must be in 0..3, got {k}")
    current = list(series)
    prec = max(c.prec for c in current)
    terms = []
    for j in range(k + 1):
        total = Ball.exact(0, prec)
        for f in current:
            if all(m == 0 for m in f.mids) and all(r == RAD_ZERO for r in f.rads):
                continue
            total = total + cheb_eval(cheb_integrate(cheb_mul(f, f)), t_end)
        terms.append(total)
        if j < k:
            current = [cheb_diff(f) for f in current]
    return terms


def hk_norm(a, k: int, t_end) -> Ball:
    """
    Upper enclosure of the Euclidean-vector H^k norm on [0, t_end]:
    sqrt(sum_{j<=k} sum_i integral (a_i^(j))^2).
    """
    series = [a] if isinstance(a, ChebSeries) else list(a)
    if any(t_end > s.T for s in series):
        raise DomainError("hk_norm: t_end beyond the series domain")
    terms = sobolev_terms(series, k, t_end)
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return ball_sqrt_clamped(total)


def norms_from_terms(terms: Sequence[Ball]) -> List[Ball]:
    """[L2, H1, H2, H3] from the Sobolev terms of one component."""
    out = []
    total = None
    for term in terms:
        total = term if total is None else total + term
        out.append(ball_sqrt_clamped(total))
    return out


# =============================================================================
# Serialization
# =============================================================================

def series_to_dict(a: ChebSeries) -> Dict[str, Any]:
    """{T, N, coeffs: [[mid, rad], ...]} with coefficients in the half-c0 convention."""
    return {
        "T": to_decimal(a.T, a.digits),
        "N": a.N,
        "digits": a.digits,
        "coeffs": [list(ball_to_pair(c, a.digits)) for c in a.coeffs],
    }


def series_from_dict(data: Dict[str, Any]) -> ChebSeries:
    digits = int(data["digits"])
    prec = digits_to_bits(digits)
    coeffs = [ball_from_pair(pair, prec) for pair in data["coeffs"]]
    return ChebSeries.from_coeffs(from_decimal(data["T"], digits), coeffs, digits)
