"""
Precision Module
Configurable-precision reals and midpoint-radius balls with outward rounding.

Everything here works on mpmath's raw mpf tuples with an explicit precision
and rounding mode, so results never depend on the global mpmath context.
"""

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Tuple, Union

import mpmath
from mpmath import libmp

from cohom1.errors import DomainError, PrecisionError
from cohom1.utils.config import GUARD_DIGITS

# =============================================================================
# Constants
# =============================================================================

RAD_PREC = 32
EXP_LIMIT = 1 << 24
RADIUS_DIGITS = 8

_NEAREST = libmp.round_nearest
_DOWN = libmp.round_floor
_UP = libmp.round_ceiling

_ZERO = libmp.fzero
_ONE = libmp.fone

BigReal = mpmath.mpf
RawMpf = tuple

_DECIMAL = re.compile(r"^\s*([+-]?)(\d+)(?:\.(\d*))?(?:[eE]([+-]?\d+))?(?:@(\d+))?\s*$")


# =============================================================================
# Precision plumbing
# =============================================================================

def digits_to_bits(digits: int) -> int:
    return libmp.dps_to_prec(int(digits))


def bits_to_digits(bits: int) -> int:
    return libmp.prec_to_dps(int(bits))


def working_digits(d_target: int) -> int:
    """Working precision for a requested decimal accuracy: d_target plus guard digits."""
    return int(d_target) + GUARD_DIGITS


def solve_digits(d_target: int, linearize: bool = False) -> int:
    """Solve precision d; linearized quantities need d >= 1.5 * d_target."""
    if linearize:
        return int(math.ceil(1.5 * int(d_target)))
    return int(d_target)


@lru_cache(maxsize=None)
def context(digits: int) -> mpmath.ctx_mp.MPContext:
    """
    Private mpmath context at a fixed number of decimal digits.

    Contexts are shared between callers asking for the same precision, so
    callers must never change ctx.dps on the returned object.
    """
    ctx = mpmath.MPContext()
    ctx.dps = int(digits)
    return ctx


def raw(x) -> RawMpf:
    """Raw mpf tuple of an mpf-like value."""
    if isinstance(x, tuple):
        return x
    if hasattr(x, "_mpf_"):
        return x._mpf_
    if isinstance(x, int):
        return libmp.from_int(x)
    if isinstance(x, float):
        return libmp.from_float(x)
    raise DomainError(f"Cannot convert {type(x).__name__} to a real value")


def make(r: RawMpf) -> BigReal:
    return mpmath.mp.make_mpf(r)


def to_fraction(x) -> Fraction:
    """Exact rational value of a finite mpf."""
    r = _checked(raw(x))
    p, q = libmp.to_rational(r)
    return Fraction(p, q)


def _checked(r: RawMpf) -> RawMpf:
    if r in (libmp.finf, libmp.fninf, libmp.fnan):
        raise PrecisionError("Non-finite value produced; increase working precision")
    if r[1]:
        exp, bc = r[2], r[3]
        if exp + bc > EXP_LIMIT or exp < -EXP_LIMIT:
            raise PrecisionError(f"Binary exponent {exp + bc} outside the supported range")
    return r


def _slack(mid: RawMpf, prec: int) -> RawMpf:
    """Upper bound for the rounding error committed when mid was rounded to prec bits."""
    if mid == _ZERO:
        return _ZERO
    return libmp.mpf_shift(libmp.mpf_abs(mid, RAD_PREC, _UP), 1 - prec)


def _radd(*terms: RawMpf) -> RawMpf:
    acc = _ZERO
    for term in terms:
        acc = libmp.mpf_add(acc, term, RAD_PREC, _UP)
    return acc


def _rmul(a: RawMpf, b: RawMpf) -> RawMpf:
    return libmp.mpf_mul(a, b, RAD_PREC, _UP)


def _rabs(a: RawMpf) -> RawMpf:
    return libmp.mpf_abs(a, RAD_PREC, _UP)


# =============================================================================
# Decimal strings
# =============================================================================

def parse_decimal(text: str) -> Tuple[Fraction, int]:
    """
    Parse `<mantissa>e<exp>@<digits>` (exponent and header optional).

    Returns:
        Tuple of (exact rational value, stated digits or 0 when absent)
    """
    match = _DECIMAL.match(str(text))
    if match is None:
        raise DomainError(f"Invalid decimal string: {text!r}")
    sign, whole, frac, exp, header = match.groups()
    frac = frac or ""
    value = Fraction(int(whole + frac), 10 ** len(frac))
    if exp:
        e = int(exp)
        value = value * 10 ** e if e >= 0 else value / 10 ** (-e)
    if sign == "-":
        value = -value
    return value, int(header) if header else 0


def fraction_to_raw(value: Fraction, prec: int, rnd=_NEAREST) -> RawMpf:
    return _checked(libmp.from_rational(value.numerator, value.denominator, prec, rnd))


def to_decimal(x, digits: int) -> str:
    """Scientific decimal string of x rounded to `digits` significant digits, with header."""
    r = _checked(raw(x))
    text = libmp.to_str(r, int(digits), min_fixed=0, max_fixed=0, show_zero_exponent=True)
    return text.replace("e+", "e") + f"@{int(digits)}"


def from_decimal(text: str, digits: int = 0) -> BigReal:
    """Nearest BigReal to a decimal string, at the stated (or given) precision."""
    value, header = parse_decimal(text)
    prec = digits_to_bits(digits or header or 15)
    return make(fraction_to_raw(value, prec))


def decimal_up(x, digits: int = RADIUS_DIGITS) -> str:
    """Decimal string >= x with `digits` significant digits (used for radii)."""
    value = x if isinstance(x, Fraction) else Fraction(x) if isinstance(x, int) else to_fraction(x)
    if value <= 0:
        if value == 0:
            return "0.0e0"
        raise DomainError("decimal_up expects a non-negative value")
    k = len(str(value.numerator)) - len(str(value.denominator))
    while Fraction(10) ** k > value:
        k -= 1
    while Fraction(10) ** (k + 1) <= value:
        k += 1
    scaled = value / Fraction(10) ** (k - digits + 1)
    mantissa = -((-scaled.numerator) // scaled.denominator)
    if mantissa >= 10 ** digits:
        mantissa //= 10
        k += 1
        if Fraction(mantissa) * Fraction(10) ** (k - digits + 1) < value:
            mantissa += 1
    text = str(mantissa)
    return f"{text[0]}.{text[1:] or '0'}e{k}"


# =============================================================================
# Balls
# =============================================================================

Number = Union[int, float, str, Fraction, BigReal, "Ball"]


class Ball:
    """
    Midpoint-radius interval [mid ± rad].

    The midpoint carries `prec` bits; the radius is a short float rounded
    upward. Instances are immutable and safe to share between threads.
    """

    __slots__ = ("_mid", "_rad", "prec")

    def __init__(self, mid: RawMpf, rad: RawMpf = _ZERO, prec: int = 53):
        self._mid = _checked(mid)
        self._rad = _checked(rad)
        if libmp.mpf_sign(self._rad) < 0:
            raise DomainError("Ball radius must be non-negative")
        self.prec = int(prec)

    # ---------------------------
    # Construction
    # ---------------------------

    @classmethod
    def exact(cls, value: Number, prec: int) -> "Ball":
        """Smallest practical ball around an exact number at `prec` bits."""
        if isinstance(value, Ball):
            return value
        if isinstance(value, str):
            value, _ = parse_decimal(value)
        if isinstance(value, Fraction):
            if value.denominator == 1:
                value = value.numerator
            else:
                mid = fraction_to_raw(value, prec)
                err = abs(to_fraction(mid) - value)
                rad = fraction_to_raw(err, RAD_PREC, _UP) if err else _ZERO
                return cls(mid, rad, prec)
        if isinstance(value, int):
            mid = libmp.from_int(value, prec, _NEAREST)
            err = abs(Fraction(value) - to_fraction(mid))
            rad = fraction_to_raw(err, RAD_PREC, _UP) if err else _ZERO
            return cls(mid, rad, prec)
        return cls(raw(value), _ZERO, prec)

    @classmethod
    def from_decimal(cls, text: str, prec: int) -> "Ball":
        return cls.exact(text, prec)

    @classmethod
    def from_interval(cls, lo, hi, prec: int) -> "Ball":
        """Ball enclosing [lo, hi] (raw tuples or mpf values)."""
        lo, hi = raw(lo), raw(hi)
        if libmp.mpf_cmp(lo, hi) > 0:
            lo, hi = hi, lo
        mid = libmp.mpf_shift(libmp.mpf_add(lo, hi, prec, _NEAREST), -1)
        up = libmp.mpf_sub(hi, mid, RAD_PREC, _UP)
        down = libmp.mpf_sub(mid, lo, RAD_PREC, _UP)
        rad = up if libmp.mpf_cmp(up, down) >= 0 else down
        return cls(mid, rad, prec)

    # ---------------------------
    # Accessors
    # ---------------------------

    @property
    def mid(self) -> BigReal:
        return make(self._mid)

    @property
    def rad(self) -> BigReal:
        return make(self._rad)

    @property
    def raw_mid(self) -> RawMpf:
        return self._mid

    @property
    def raw_rad(self) -> RawMpf:
        return self._rad

    def lower(self) -> BigReal:
        return make(libmp.mpf_sub(self._mid, self._rad, self.prec, _DOWN))

    def upper(self) -> BigReal:
        return make(libmp.mpf_add(self._mid, self._rad, self.prec, _UP))

    def mag(self) -> BigReal:
        """Upper bound of |x| over the ball."""
        return make(libmp.mpf_add(libmp.mpf_abs(self._mid), self._rad, self.prec, _UP))

    def contains(self, value: Number) -> bool:
        if isinstance(value, Ball):
            return (
                to_fraction(self.lower()) <= to_fraction(value.lower())
                and to_fraction(value.upper()) <= to_fraction(self.upper())
            )
        if isinstance(value, str):
            value, _ = parse_decimal(value)
        if not isinstance(value, Fraction):
            value = to_fraction(value) if not isinstance(value, int) else Fraction(value)
        return to_fraction(self.lower()) <= value <= to_fraction(self.upper())

    def contains_zero(self) -> bool:
        if self._rad == _ZERO:
            return self._mid == _ZERO
        return libmp.mpf_cmp(libmp.mpf_abs(self._mid), self._rad) <= 0

    def is_exact(self) -> bool:
        return self._rad == _ZERO

    def __repr__(self) -> str:
        digits = min(bits_to_digits(self.prec), 20)
        return f"Ball({to_decimal(self._mid, digits)} ± {decimal_up(self._rad, 3)})"

    # ---------------------------
    # Operators
    # ---------------------------

    def _coerce(self, other: Number) -> "Ball":
        return other if isinstance(other, Ball) else Ball.exact(other, self.prec)

    def __add__(self, other):
        return ball_add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ball_sub(self, self._coerce(other))

    def __rsub__(self, other):
        return ball_sub(self._coerce(other), self)

    def __mul__(self, other):
        return ball_mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ball_div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return ball_div(self._coerce(other), self)

    def __neg__(self):
        return Ball(libmp.mpf_neg(self._mid), self._rad, self.prec)

    def __abs__(self):
        return ball_abs(self)

    def __pow__(self, n: int):
        return ball_pow(self, n)


# =============================================================================
# Ball arithmetic
# =============================================================================

def ball_add(a: Ball, b: Ball) -> Ball:
    prec = max(a.prec, b.prec)
    mid = libmp.mpf_add(a.raw_mid, b.raw_mid, prec, _NEAREST)
    rad = _radd(a.raw_rad, b.raw_rad, _slack(mid, prec))
    return Ball(mid, rad, prec)


def ball_sub(a: Ball, b: Ball) -> Ball:
    prec = max(a.prec, b.prec)
    mid = libmp.mpf_sub(a.raw_mid, b.raw_mid, prec, _NEAREST)
    rad = _radd(a.raw_rad, b.raw_rad, _slack(mid, prec))
    return Ball(mid, rad, prec)


def ball_mul(a: Ball, b: Ball) -> Ball:
    prec = max(a.prec, b.prec)
    mid = libmp.mpf_mul(a.raw_mid, b.raw_mid, prec, _NEAREST)
    rad = _radd(
        _rmul(_rabs(a.raw_mid), b.raw_rad),
        _rmul(_rabs(b.raw_mid), a.raw_rad),
        _rmul(a.raw_rad, b.raw_rad),
        _slack(mid, prec),
    )
    return Ball(mid, rad, prec)


def ball_div(a: Ball, b: Ball) -> Ball:
    """a / b; requires the divisor ball to exclude zero."""
    prec = max(a.prec, b.prec)
    bm = libmp.mpf_abs(b.raw_mid)
    if libmp.mpf_cmp(bm, b.raw_rad) <= 0:
        raise DomainError("Division by a ball containing zero")
    mid = libmp.mpf_div(a.raw_mid, b.raw_mid, prec, _NEAREST)
    rad = _slack(mid, prec)
    if a.raw_rad != _ZERO or b.raw_rad != _ZERO:
        # |a/b - am/bm| <= (|am| rb + |bm| ra) / (|bm| (|bm| - rb))
        gap = libmp.mpf_sub(bm, b.raw_rad, RAD_PREC, _DOWN)
        if libmp.mpf_sign(gap) <= 0:
            raise DomainError("Division by a ball too close to zero")
        denom = libmp.mpf_mul(libmp.mpf_abs(bm, RAD_PREC, _DOWN), gap, RAD_PREC, _DOWN)
        numer = _radd(_rmul(_rabs(a.raw_mid), b.raw_rad), _rmul(_rabs(bm), a.raw_rad))
        rad = _radd(rad, libmp.mpf_div(numer, denom, RAD_PREC, _UP))
    return Ball(mid, rad, prec)


def ball_sqrt(a: Ball) -> Ball:
    prec = a.prec
    lo = libmp.mpf_sub(a.raw_mid, a.raw_rad, prec + 8, _DOWN)
    if libmp.mpf_sign(lo) < 0:
        raise DomainError("Square root of a ball meeting the negative reals")
    if a.raw_rad == _ZERO:
        mid = libmp.mpf_sqrt(a.raw_mid, prec, _NEAREST)
        sq = libmp.mpf_mul(mid, mid)
        if libmp.mpf_cmp(sq, a.raw_mid) == 0:
            return Ball(mid, _ZERO, prec)
        return Ball(mid, _slack(mid, prec), prec)
    hi = libmp.mpf_add(a.raw_mid, a.raw_rad, prec + 8, _UP)
    return Ball.from_interval(
        libmp.mpf_sqrt(lo, prec, _DOWN), libmp.mpf_sqrt(hi, prec, _UP), prec
    )


def ball_abs(a: Ball) -> Ball:
    if not a.contains_zero():
        return Ball(libmp.mpf_abs(a.raw_mid), a.raw_rad, a.prec)
    return Ball.from_interval(_ZERO, a.mag()._mpf_, a.prec)


def ball_pow(a: Ball, n: int) -> Ball:
    """Integer power by repeated squaring; negative powers go through ball_div."""
    n = int(n)
    if n < 0:
        return ball_div(Ball.exact(1, a.prec), ball_pow(a, -n))
    if n % 2 == 0 and n > 0 and a.contains_zero():
        # even powers of balls around zero stay non-negative
        top = libmp.mpf_pow_int(a.mag()._mpf_, n, a.prec, _UP)
        return Ball.from_interval(_ZERO, top, a.prec)
    result = Ball.exact(1, a.prec)
    base = a
    while n:
        if n & 1:
            result = ball_mul(result, base)
        n >>= 1
        if n:
            base = ball_mul(base, base)
    return result


def ball_exp(a: Ball) -> Ball:
    guard = a.prec + 20
    lo = libmp.mpf_exp(a.lower()._mpf_, guard, _DOWN)
    hi = libmp.mpf_exp(a.upper()._mpf_, guard, _UP)
    widen = libmp.mpf_shift(_ONE, -a.prec)
    lo = libmp.mpf_mul(lo, libmp.mpf_sub(_ONE, widen), a.prec, _DOWN)
    hi = libmp.mpf_mul(hi, libmp.mpf_add(_ONE, widen), a.prec, _UP)
    return Ball.from_interval(_checked(lo), _checked(hi), a.prec)


def ball_log(a: Ball) -> Ball:
    low = a.lower()._mpf_
    if libmp.mpf_sign(low) <= 0:
        raise DomainError("Logarithm of a ball meeting the non-positive reals")
    guard = a.prec + 20
    lo = libmp.mpf_log(low, guard, _DOWN)
    hi = libmp.mpf_log(a.upper()._mpf_, guard, _UP)
    widen = libmp.mpf_shift(_ONE, -a.prec)
    pad = _radd(_rmul(_rabs(lo), widen), _rmul(_rabs(hi), widen), widen)
    lo = libmp.mpf_sub(lo, pad, a.prec, _DOWN)
    hi = libmp.mpf_add(hi, pad, a.prec, _UP)
    return Ball.from_interval(lo, hi, a.prec)


def ball_log10(a: Ball) -> Ball:
    ln10 = ball_log(Ball.exact(10, a.prec))
    return ball_div(ball_log(a), ln10)


def ball_max_upper(balls) -> BigReal:
    """Largest upper endpoint among balls."""
    best = None
    for b in balls:
        u = b.upper()
        if best is None or u > best:
            best = u
    if best is None:
        raise DomainError("ball_max_upper of an empty collection")
    return best


# =============================================================================
# Ball serialization
# =============================================================================

def ball_to_pair(b: Ball, digits: int) -> Tuple[str, str]:
    """
    Serialize a ball as [mid, rad] decimal strings.

    The radius absorbs the decimal rounding of the midpoint, so the
    deserialized ball always contains the original one.
    """
    mid_text = to_decimal(b.raw_mid, digits)
    mid_value, _ = parse_decimal(mid_text)
    gap = abs(mid_value - to_fraction(b.raw_mid))
    rad = to_fraction(b.raw_rad) + gap
    return mid_text, decimal_up(rad)


def ball_from_pair(pair, prec: int) -> Ball:
    mid_text, rad_text = pair
    mid_value, _ = parse_decimal(mid_text)
    rad_value, _ = parse_decimal(rad_text)
    mid = fraction_to_raw(mid_value, prec)
    gap = abs(mid_value - to_fraction(mid)) + rad_value
    rad = fraction_to_raw(gap, RAD_PREC, _UP) if gap else _ZERO
    return Ball(mid, rad, prec)


# =============================================================================
# Radius helpers (upward-rounded short floats, used by the series algebra)
# =============================================================================

RAD_ZERO = _ZERO


def rad_sum(terms) -> RawMpf:
    return _radd(*terms)


def rad_mul(a: RawMpf, b: RawMpf) -> RawMpf:
    return _rmul(a, b)


def rad_abs(x) -> RawMpf:
    """Upper bound of |x| as a radius."""
    return _rabs(_checked(raw(x)))


def rad_from(value) -> RawMpf:
    """Upper bound of a non-negative int, Fraction or mpf as a radius."""
    if isinstance(value, Fraction):
        return fraction_to_raw(abs(value), RAD_PREC, _UP)
    if isinstance(value, int):
        return libmp.from_int(abs(value), RAD_PREC, _UP)
    return rad_abs(value)


def rad_max(terms) -> RawMpf:
    best = _ZERO
    for term in terms:
        if libmp.mpf_cmp(term, best) > 0:
            best = term
    return best


def rad_div(a: RawMpf, b: RawMpf) -> RawMpf:
    """a / b rounded up; b must be a positive lower bound."""
    return libmp.mpf_div(a, b, RAD_PREC, _UP)


def rad_slack(mid, prec: int) -> RawMpf:
    return _slack(_checked(raw(mid)), prec)


def rad_unit(prec: int) -> RawMpf:
    """2^(1 - prec), one rounding unit relative to the magnitude."""
    return libmp.mpf_shift(_ONE, 1 - prec)


def ball_sqrt_clamped(a: Ball) -> Ball:
    """sqrt of a ball known to enclose a non-negative quantity; the lower end is clamped at 0."""
    lo = libmp.mpf_sub(a.raw_mid, a.raw_rad, a.prec + 8, _DOWN)
    if libmp.mpf_sign(lo) < 0:
        hi = libmp.mpf_add(a.raw_mid, a.raw_rad, a.prec, _UP)
        if libmp.mpf_sign(hi) < 0:
            raise DomainError("Square root of a negative ball")
        return Ball.from_interval(_ZERO, libmp.mpf_sqrt(hi, a.prec, _UP), a.prec)
    return ball_sqrt(a)
