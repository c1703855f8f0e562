"""
Test Suite for the precision layer: decimal strings and ball arithmetic
"""

from fractions import Fraction

import mpmath
import numpy as np
import pytest

from cohom1.errors import DomainError, PrecisionError
from cohom1.numerics.precision import (
    Ball,
    ball_exp,
    ball_from_pair,
    ball_log,
    ball_log10,
    ball_pow,
    ball_sqrt,
    ball_sqrt_clamped,
    ball_to_pair,
    context,
    decimal_up,
    digits_to_bits,
    from_decimal,
    parse_decimal,
    raw,
    solve_digits,
    to_decimal,
    to_fraction,
    working_digits,
)

PREC = digits_to_bits(40)


# ---------------------------
# Fixtures
# ---------------------------

@pytest.fixture
def random_fractions():
    """Pairs of small random rationals with non-zero second entries."""
    rng = np.random.default_rng(12)
    pairs = []
    for _ in range(40):
        p, q, r, s = rng.integers(-999, 1000, size=4)
        pairs.append((Fraction(int(p), int(abs(q)) + 1), Fraction(int(r) or 1, int(abs(s)) + 1)))
    return pairs


# ---------------------------
# Precision Plumbing Tests
# ---------------------------

def test_working_digits_adds_guard():
    """Test that working precision carries 20 guard digits."""
    assert working_digits(30) == 50


def test_solve_digits_for_linearization():
    """Test the 1.5x precision rule for linearized quantities."""
    assert solve_digits(20) == 20
    assert solve_digits(20, linearize=True) == 30
    assert solve_digits(21, linearize=True) == 32


def test_context_is_shared_per_precision():
    """Test that contexts are cached by digits."""
    assert context(40) is context(40)
    assert context(40).dps == 40


def test_to_fraction_is_exact():
    """Test exact conversion of binary values."""
    assert to_fraction(mpmath.mpf("0.5")) == Fraction(1, 2)
    assert to_fraction(mpmath.mpf(-3)) == -3


def test_non_finite_values_rejected():
    """Test that infinities raise PrecisionError."""
    with pytest.raises(PrecisionError):
        to_fraction(mpmath.inf)


# ---------------------------
# Decimal String Tests
# ---------------------------

def test_parse_decimal_with_header():
    """Test parsing mantissa, exponent and digit header."""
    assert parse_decimal("1.25e-3@40") == (Fraction(1, 800), 40)
    assert parse_decimal("-7") == (Fraction(-7), 0)
    assert parse_decimal("6.0838655") == (Fraction(60838655, 10 ** 7), 0)


@pytest.mark.parametrize("text", ["", "abc", "1.2.3", "1e", "@30"])
def test_parse_decimal_invalid(text):
    """Test that malformed decimals raise DomainError."""
    with pytest.raises(DomainError):
        parse_decimal(text)


def test_to_decimal_carries_header():
    """Test that decimal output states its digits and parses back closely."""
    x = context(50).pi
    text = to_decimal(x, 40)
    assert text.endswith("@40")
    back = from_decimal(text)
    assert abs(to_fraction(back) - to_fraction(x)) < Fraction(1, 10 ** 38)


def test_decimal_up_rounds_upward():
    """Test upward rounding to a fixed number of significant digits."""
    assert decimal_up(Fraction(1, 3), 3) == "3.34e-1"
    assert decimal_up(Fraction(1, 10 ** 350), 1) == "1.0e-350"
    assert decimal_up(0) == "0.0e0"
    assert decimal_up(Fraction(25, 10), 2) == "2.5e0"


def test_decimal_up_is_an_upper_bound():
    """Test that the printed value never falls below the input."""
    rng = np.random.default_rng(3)
    for p, q in rng.integers(1, 10 ** 6, size=(30, 2)):
        value = Fraction(int(p), int(q))
        assert parse_decimal(decimal_up(value, 4))[0] >= value


def test_decimal_up_negative():
    """Test that negative values are rejected."""
    with pytest.raises(DomainError):
        decimal_up(Fraction(-1, 2))


# ---------------------------
# Ball Tests
# ---------------------------

def test_exact_ball_of_integer():
    """Test that small integers give zero-radius balls."""
    b = Ball.exact(5, PREC)
    assert b.is_exact()
    assert b.contains(5)
    assert not b.contains(Fraction(51, 10))


def test_exact_ball_of_fraction_encloses():
    """Test that non-dyadic rationals are enclosed with a radius."""
    b = Ball.exact(Fraction(1, 3), PREC)
    assert not b.is_exact()
    assert b.contains(Fraction(1, 3))
    assert b.rad < mpmath.mpf(10) ** -39


def test_ball_from_decimal_string():
    """Test decimal strings are parsed exactly before enclosure."""
    b = Ball.exact("0.1", PREC)
    assert b.contains(Fraction(1, 10))


def test_negative_radius_rejected():
    """Test that a negative radius raises DomainError."""
    with pytest.raises(DomainError):
        Ball(raw(1), raw(-1), PREC)


def test_arithmetic_encloses_exact_results(random_fractions):
    """Test +, -, *, / against exact rational arithmetic."""
    for a, b in random_fractions:
        x, y = Ball.exact(a, PREC), Ball.exact(b, PREC)
        assert (x + y).contains(a + b)
        assert (x - y).contains(a - b)
        assert (x * y).contains(a * b)
        assert (x / y).contains(a / b)
        assert (-x).contains(-a)
        assert abs(x).contains(abs(a))


def test_arithmetic_encloses_exact_results_at_double_precision():
    """Test containment of every arithmetic operation on 10^4 random rational pairs at 53 bits."""
    rng = np.random.default_rng(7)
    numerators = rng.integers(-10 ** 6, 10 ** 6, size=(10_000, 2))
    denominators = rng.integers(1, 10 ** 6, size=(10_000, 2))
    for (p, r), (q, s) in zip(numerators, denominators):
        a, b = Fraction(int(p), int(q)), Fraction(int(r) or 1, int(s))
        x, y = Ball.exact(a, 53), Ball.exact(b, 53)
        assert (x + y).contains(a + b)
        assert (x - y).contains(a - b)
        assert (x * y).contains(a * b)
        assert (x / y).contains(a / b)


@pytest.mark.parametrize("op", ["add", "sub", "mul", "div"])
def test_radius_shrinks_with_precision(random_fractions, op):
    """Test that raising the working precision never widens a result."""
    apply = {
        "add": lambda x, y: x + y,
        "sub": lambda x, y: x - y,
        "mul": lambda x, y: x * y,
        "div": lambda x, y: x / y,
    }[op]
    for a, b in random_fractions:
        radii = [
            to_fraction(apply(Ball.exact(a, prec), Ball.exact(b, prec)).rad)
            for prec in (53, 100, 200, 400)
        ]
        assert all(high <= low for low, high in zip(radii, radii[1:])), (a, b, radii)


def test_mixed_operands_are_coerced():
    """Test arithmetic with plain numbers on either side."""
    x = Ball.exact(Fraction(1, 3), PREC)
    assert (1 - x).contains(Fraction(2, 3))
    assert (x * 3).contains(1)
    assert (2 / x).contains(6)


def test_division_by_ball_around_zero():
    """Test that dividing by a ball containing zero raises DomainError."""
    around_zero = Ball.from_interval(mpmath.mpf(-1), mpmath.mpf(1), PREC)
    with pytest.raises(DomainError):
        Ball.exact(1, PREC) / around_zero


def test_contains_zero():
    """Test zero membership for exact and wide balls."""
    assert Ball.exact(0, PREC).contains_zero()
    assert not Ball.exact(1, PREC).contains_zero()
    assert Ball.from_interval(mpmath.mpf(-1), mpmath.mpf(2), PREC).contains_zero()


def test_ball_contains_ball():
    """Test containment between balls."""
    wide = Ball.from_interval(mpmath.mpf(0), mpmath.mpf(1), PREC)
    narrow = Ball.exact(Fraction(1, 3), PREC)
    assert wide.contains(narrow)
    assert not narrow.contains(wide)


# ---------------------------
# Ball Function Tests
# ---------------------------

def test_sqrt_of_perfect_square_is_exact():
    """Test that sqrt(4) is the exact ball 2."""
    root = ball_sqrt(Ball.exact(4, PREC))
    assert root.is_exact()
    assert root.contains(2)


def test_sqrt_encloses_irrational_root():
    """Test that the square of sqrt(2) encloses 2."""
    root = ball_sqrt(Ball.exact(2, PREC))
    assert (root * root).contains(2)
    assert 1.4142 < float(root.mid) < 1.4143


def test_sqrt_of_negative_ball():
    """Test that sqrt of a negative ball raises DomainError."""
    with pytest.raises(DomainError):
        ball_sqrt(Ball.exact(-1, PREC))


def test_clamped_sqrt_accepts_ball_touching_zero():
    """Test that a ball straddling 0 is clamped instead of rejected."""
    b = Ball.from_interval(mpmath.mpf("-1e-30"), mpmath.mpf("1e-20"), PREC)
    root = ball_sqrt_clamped(b)
    assert root.contains(0)
    assert root.upper() >= mpmath.mpf("0.99e-10")


def test_even_power_of_ball_around_zero_is_non_negative():
    """Test x^2 over [-1, 2] is [0, 4]."""
    b = Ball.from_interval(mpmath.mpf(-1), mpmath.mpf(2), PREC)
    sq = ball_pow(b, 2)
    assert sq.lower() >= 0
    assert sq.upper() >= 4


def test_negative_power():
    """Test x^-2 through division."""
    assert ball_pow(Ball.exact(2, PREC), -2).contains(Fraction(1, 4))


def test_exp_and_log():
    """Test exp(0), log(1) and log10(1000)."""
    assert ball_exp(Ball.exact(0, PREC)).contains(1)
    assert ball_log(Ball.exact(1, PREC)).contains(0)
    assert ball_log10(Ball.exact(1000, PREC)).contains(3)


def test_log_of_non_positive():
    """Test that log of a non-positive ball raises DomainError."""
    with pytest.raises(DomainError):
        ball_log(Ball.exact(0, PREC))


# ---------------------------
# Serialization Tests
# ---------------------------

def test_ball_pair_encloses_original():
    """Test that [mid, rad] strings deserialize to an enclosing ball."""
    original = Ball.exact(Fraction(1, 3), digits_to_bits(60)) * Ball.exact(Fraction(2, 7), digits_to_bits(60))
    pair = ball_to_pair(original, 20)
    restored = ball_from_pair(pair, digits_to_bits(60))
    assert restored.contains(original)
    assert restored.contains(Fraction(2, 21))
