"""
Test Suite for the reference tables and itemized comparisons
"""

from fractions import Fraction

import pytest

from cohom1.errors import DomainError
from cohom1.numerics.precision import Ball, digits_to_bits
from cohom1.proof.reference import ReferenceValues, exact, upper_of


@pytest.fixture(scope="module")
def reference():
    return ReferenceValues()


def test_tables_load(reference):
    """Test the stored system and a few tabulated values."""
    assert reference.system == {"d1": 2, "d2": 9}
    assert reference.scalar("shooting", "alpha") == Fraction("6.0838655")
    assert reference.tolerance("endpoints") == Fraction(1, 10 ** 6)
    assert reference.constant("epsilon_final") == Fraction(1, 10 ** 350)
    assert reference.extended_run["digits"] == 550


def test_exact_conversions():
    """Test exact values of strings, ints and upper bounds of balls."""
    assert exact("1e-3") == Fraction(1, 1000)
    assert exact(4) == Fraction(4)
    ball = Ball.exact(Fraction(-3, 4), digits_to_bits(30))
    assert upper_of(ball) == Fraction(3, 4)


def test_match_within_tolerance(reference):
    """Test that values inside the tolerance pass and outside fail."""
    items = reference.match("shooting", "alpha", ["6.08386555"])
    assert items[0].passed
    assert items[0].item == "shooting.alpha"
    items = reference.match("shooting", "alpha", ["6.0838"])
    assert not items[0].passed


def test_match_names_vector_entries(reference):
    """Test 1-based item names for vector rows."""
    items = reference.match("endpoints", "eta", ["-2.896297", "0.058442", "-6.030915"])
    assert [i.item for i in items] == ["endpoints.eta[1]", "endpoints.eta[2]", "endpoints.eta[3]"]
    assert all(i.passed for i in items)


def test_upper_bounds(reference):
    """Test that computed bounds above the table fail and None is skipped."""
    items = reference.upper("sobolev", "eta1", ["2.5", None, "12.57", "40"])
    assert [i.passed for i in items] == [True, False, True]


def test_lookup_errors(reference):
    """Test unknown groups, keys, wrong comparison kinds and short inputs."""
    with pytest.raises(DomainError):
        reference.value("nope", "alpha")
    with pytest.raises(DomainError):
        reference.value("shooting", "beta")
    with pytest.raises(DomainError):
        reference.match("sobolev", "eta1", ["1"] * 4)
    with pytest.raises(DomainError):
        reference.upper("shooting", "alpha", ["1"])
    with pytest.raises(DomainError):
        reference.match("endpoints", "eta", ["1"])
    with pytest.raises(DomainError):
        reference.constant("missing")
