"""
Test Suite for Chebyshev series with ball coefficients
"""

from fractions import Fraction

import numpy as np
import pytest

from cohom1.errors import DomainError
from cohom1.numerics.chebyshev import (
    ChebSeries,
    ChebVec,
    cesaro_matrix,
    cesaro_mean,
    cheb_diff,
    cheb_eval,
    cheb_integrate,
    cheb_mul,
    fit,
    hk_norm,
    nodes,
    norms_from_terms,
    series_from_dict,
    series_to_dict,
    sobolev_terms,
    sup_bound,
)
from cohom1.numerics.precision import Ball, context, digits_to_bits

DIGITS = 30
PREC = digits_to_bits(DIGITS)


def exact_eval(standard, T, t):
    """Exact value of sum a_k T_k(2t/T - 1) for rational coefficients."""
    x = Fraction(2) * t / T - 1
    prev, cur = Fraction(1), x
    total = standard[0] + (standard[1] * x if len(standard) > 1 else 0)
    for a in standard[2:]:
        prev, cur = cur, 2 * x * cur - prev
        total += a * cur
    return total


def to_monomial(standard, T):
    """Coefficients of sum a_k T_k(2t/T - 1) in the basis 1, t, t^2, ..."""
    x = [Fraction(-1), Fraction(2) / T]
    prev, cur = [Fraction(1)], x
    total = [Fraction(0)] * max(len(standard), 2)
    for k, a in enumerate(standard):
        if k == 0:
            term = prev
        elif k == 1:
            term = cur
        else:
            prev, cur = cur, _poly_sub(_poly_mul([Fraction(2) * c for c in x], cur), prev)
            term = cur
        total = _poly_add(total, [a * c for c in term])
    return total


def _poly_add(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _poly_sub(p, q):
    return _poly_add(p, [-c for c in q])


def _poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_eval(p, t):
    total = Fraction(0)
    for c in reversed(p):
        total = total * t + c
    return total


def _poly_diff(p):
    return [i * c for i, c in enumerate(p)][1:] or [Fraction(0)]


def _poly_integrate(p):
    return [Fraction(0)] + [c / (i + 1) for i, c in enumerate(p)]


def _poly_cesaro(p):
    return [c / (i + 1) for i, c in enumerate(p)]


    return total


# ---------------------------
# Fixtures
# ---------------------------

@pytest.fixture
def random_series():
    """Pairs of integer-coefficient series on [0, 2] with their standard coefficients."""
    rng = np.random.default_rng(21)
    out = []
    for _ in range(5):
        a = [int(v) for v in rng.integers(-9, 10, size=int(rng.integers(2, 8)))]
        b = [int(v) for v in rng.integers(-9, 10, size=int(rng.integers(2, 8)))]
        out.append((a, b))
    return out


@pytest.fixture
def degree_ten_series():
    """Integer-coefficient series of degree <= 10 on [0, 2]."""
    rng = np.random.default_rng(33)
    return [
        [int(v) for v in rng.integers(-9, 10, size=int(rng.integers(1, 12)))]
        for _ in range(16)
    ]


def _series(standard, T=2):
    return ChebSeries(T, standard, None, DIGITS)


# ---------------------------
# Construction Tests
# ---------------------------

def test_half_c0_convention():
    """Test that from_coeffs halves c_0 and coeffs doubles it back."""
    s = ChebSeries.from_coeffs(1, [2, 3], DIGITS)
    assert s.ball(0).contains(1)
    assert s.ball(1).contains(3)
    assert s.coeffs[0].contains(2)
    assert s.ball(5).contains(0)


def test_identity_and_constant():
    """Test that identity evaluates to t and constant to its value."""
    ident = ChebSeries.identity(2, DIGITS)
    assert cheb_eval(ident, Fraction(1, 2)).contains(Fraction(1, 2))
    assert cheb_eval(ChebSeries.constant(2, 7, DIGITS), Fraction(3, 2)).contains(7)


def test_non_positive_domain_rejected():
    """Test that T <= 0 raises DomainError."""
    with pytest.raises(DomainError):
        ChebSeries(0, [1], None, DIGITS)


def test_mismatched_domains_rejected():
    """Test that series on different domains cannot be combined."""
    with pytest.raises(DomainError):
        ChebSeries.identity(1, DIGITS) + ChebSeries.identity(2, DIGITS)
    with pytest.raises(DomainError):
        ChebVec([ChebSeries.identity(1, DIGITS), ChebSeries.identity(2, DIGITS)])


# ---------------------------
# Evaluation Tests
# ---------------------------

def test_eval_encloses_exact_values(random_series):
    """Test Clenshaw evaluation against exact rational evaluation."""
    for a, _ in random_series:
        s = _series(a)
        for t in (Fraction(0), Fraction(1, 3), Fraction(7, 5), Fraction(2)):
            assert cheb_eval(s, t).contains(exact_eval(a, 2, t))


def test_eval_outside_domain():
    """Test that points outside [0, T] raise DomainError."""
    s = ChebSeries.identity(1, DIGITS)
    with pytest.raises(DomainError):
        cheb_eval(s, Fraction(3, 2))
    with pytest.raises(DomainError):
        cheb_eval(s, Fraction(-1, 10))


def test_sup_bound_dominates_values(random_series):
    """Test that the crude sup bound exceeds every sampled value."""
    for a, _ in random_series:
        s = _series(a)
        bound = sup_bound(s).upper()
        for k in range(11):
            assert abs(cheb_eval(s, Fraction(k, 5)).mid) <= bound


# ---------------------------
# Algebra Tests
# ---------------------------

def test_product_coefficients():
    """Test (1 + T1) T1 = 1/2 + T1 + T2/2."""
    a = ChebSeries.from_coeffs(1, [2, 1], DIGITS)
    b = ChebSeries.from_coeffs(1, [0, 1], DIGITS)
    prod = cheb_mul(a, b)
    assert prod.N == 3
    for k, want in enumerate([Fraction(1, 2), Fraction(1), Fraction(1, 2)]):
        assert prod.ball(k).contains(want)


def test_product_encloses_pointwise_product(random_series):
    """Test that the product series encloses the product of exact values."""
    for a, b in random_series:
        prod = _series(a) * _series(b)
        for t in (Fraction(1, 7), Fraction(1), Fraction(9, 5)):
            assert cheb_eval(prod, t).contains(exact_eval(a, 2, t) * exact_eval(b, 2, t))


def test_sum_difference_and_scaling(random_series):
    """Test linear operations against exact evaluation."""
    t = Fraction(4, 3)
    for a, b in random_series:
        sa, sb = _series(a), _series(b)
        va, vb = exact_eval(a, 2, t), exact_eval(b, 2, t)
        assert cheb_eval(sa + sb, t).contains(va + vb)
        assert cheb_eval(sa - sb, t).contains(va - vb)
        assert cheb_eval(sa * Fraction(1, 3), t).contains(va / 3)
        assert cheb_eval(sa / 7, t).contains(va / 7)
        assert cheb_eval(-sa, t).contains(-va)


def test_integrate_constant_and_identity():
    """Test antiderivatives of 1 and t vanish at 0."""
    one = ChebSeries.constant(2, 1, DIGITS)
    ident = ChebSeries.identity(2, DIGITS)
    t = Fraction(3, 4)
    assert cheb_eval(cheb_integrate(one), t).contains(t)
    assert cheb_eval(cheb_integrate(ident), t).contains(t * t / 2)
    assert cheb_eval(cheb_integrate(ident), 0).contains(0)


def test_diff_of_square():
    """Test d/dt t^2 = 2t."""
    ident = ChebSeries.identity(2, DIGITS)
    derivative = cheb_diff(ident * ident)
    assert cheb_eval(cheb_diff(ident), Fraction(1, 3)).contains(1)
    assert cheb_eval(derivative, Fraction(5, 4)).contains(Fraction(5, 2))


def test_diff_undoes_integrate(random_series):
    """Test that differentiating the antiderivative returns the series."""
    t = Fraction(2, 3)
    for a, _ in random_series:
        back = cheb_diff(cheb_integrate(_series(a)))
        assert cheb_eval(back, t).contains(exact_eval(a, 2, t))


# ---------------------------
# Cesaro Mean Tests
# ---------------------------

def test_cesaro_matrix_column():
    """Test C_2 = T2/3 - 2 T1/3."""
    M = cesaro_matrix(3)
    assert [M[i][2] for i in range(3)] == [Fraction(0), Fraction(-2, 3), Fraction(1, 3)]
    assert [M[i][0] for i in range(3)] == [Fraction(1), Fraction(0), Fraction(0)]
    assert [M[i][1] for i in range(3)] == [Fraction(-1, 2), Fraction(1, 2), Fraction(0)]


def test_cesaro_mean_of_identity():
    """Test (1/t) integral_0^t s ds = t/2."""
    mean = cesaro_mean(ChebSeries.identity(1, DIGITS))
    assert cheb_eval(mean, Fraction(3, 5)).contains(Fraction(3, 10))


def test_cesaro_mean_of_square():
    """Test (1/t) integral_0^t s^2 ds = t^2/3 on [0, 2]."""
    ident = ChebSeries.identity(2, DIGITS)
    mean = cesaro_mean(ident * ident)
    assert cheb_eval(mean, Fraction(3, 2)).contains(Fraction(3, 4))


# ---------------------------
# Fitting Tests
# ---------------------------

def test_nodes_are_chebyshev_points():
    """Test the three nodes of [0, 2] in descending order."""
    pts = nodes(3, 2, DIGITS)
    assert len(pts) == 3
    assert pts[0] > pts[1] > pts[2]
    assert abs(pts[1] - 1) < context(DIGITS).mpf(10) ** -25
    assert float(pts[0]) == pytest.approx(1 + 3 ** 0.5 / 2)


def test_fit_reproduces_cubic():
    """Test that a 6-node fit of t^3 is exact up to rounding."""
    s = fit(lambda t: t ** 3, 6, 1, DIGITS)
    for t in (Fraction(37, 100), Fraction(9, 10)):
        assert abs(Fraction(str(cheb_eval(s, t).mid)) - t ** 3) < Fraction(1, 10 ** 25)


def test_fit_rejects_empty():
    """Test that N < 1 raises DomainError."""
    with pytest.raises(DomainError):
        nodes(0, 1, DIGITS)


# ---------------------------
# Sobolev Norm Tests
# ---------------------------

def test_l2_norm_of_constant():
    """Test |1|_L2 on [0, 1] is 1."""
    assert hk_norm(ChebSeries.constant(1, 1, DIGITS), 0, 1).contains(1)


def test_h1_norm_of_identity():
    """Test |t|_H1^2 on [0, 1] is 1/3 + 1."""
    norm = hk_norm(ChebSeries.identity(1, DIGITS), 1, 1)
    assert (norm * norm).contains(Fraction(4, 3))


def test_vector_norm_sums_components():
    """Test that a vector norm adds the component integrals."""
    comps = [ChebSeries.constant(1, 3, DIGITS), ChebSeries.constant(1, 4, DIGITS)]
    assert hk_norm(comps, 2, 1).contains(5)


def test_sobolev_terms_order_limits():
    """Test that orders above 3 raise DomainError."""
    with pytest.raises(DomainError):
        sobolev_terms([ChebSeries.identity(1, DIGITS)], 4, 1)


def test_hk_norm_beyond_domain():
    """Test that t_end past T raises DomainError."""
    with pytest.raises(DomainError):
        hk_norm(ChebSeries.identity(1, DIGITS), 0, 2)


def test_norms_from_terms_accumulates():
    """Test [sqrt(I0), sqrt(I0 + I1)]."""
    terms = [Ball.exact(1, PREC), Ball.exact(3, PREC)]
    l2, h1 = norms_from_terms(terms)
    assert l2.contains(1)
    assert h1.contains(2)


# ---------------------------
# Serialization Tests
# ---------------------------

def test_series_dict_encloses_original():
    """Test that a serialized series deserializes to enclosing coefficients."""
    ident = ChebSeries.identity(1, DIGITS)
    original = cheb_mul(ident, ident + Fraction(1, 3))
    data = series_to_dict(original)
    assert data["N"] == original.N
    restored = series_from_dict(data)
    assert restored.T == original.T
    for k in range(original.N):
        assert restored.ball(k).contains(original.ball(k))


# ---------------------------
# Monomial Oracle Tests
# ---------------------------

ORACLE_POINTS = (Fraction(0), Fraction(1, 5), Fraction(1), Fraction(17, 9), Fraction(2))


def test_monomial_conversion_matches_clenshaw(degree_ten_series):
    """Test the monomial helper against the direct three-term evaluation."""
    for a in degree_ten_series:
        mono = to_monomial(a, 2)
        for t in ORACLE_POINTS:
            assert _poly_eval(mono, t) == exact_eval(a, 2, t)


def test_product_matches_monomial_oracle(degree_ten_series):
    """Test cheb_mul against polynomial multiplication in the monomial basis."""
    for a, b in zip(degree_ten_series, degree_ten_series[1:]):
        expected = _poly_mul(to_monomial(a, 2), to_monomial(b, 2))
        prod = cheb_mul(_series(a), _series(b))
        for t in ORACLE_POINTS:
            assert cheb_eval(prod, t).contains(_poly_eval(expected, t))


def test_diff_matches_monomial_oracle(degree_ten_series):
    """Test cheb_diff against term-wise differentiation."""
    for a in degree_ten_series:
        expected = _poly_diff(to_monomial(a, 2))
        derivative = cheb_diff(_series(a))
        for t in ORACLE_POINTS:
            assert cheb_eval(derivative, t).contains(_poly_eval(expected, t))


def test_integrate_matches_monomial_oracle(degree_ten_series):
    """Test cheb_integrate against the antiderivative vanishing at 0."""
    for a in degree_ten_series:
        expected = _poly_integrate(to_monomial(a, 2))
        antiderivative = cheb_integrate(_series(a))
        for t in ORACLE_POINTS:
            assert cheb_eval(antiderivative, t).contains(_poly_eval(expected, t))


def test_cesaro_mean_matches_monomial_oracle(degree_ten_series):
    """Test cesaro_mean against c_i t^i -> c_i t^i / (i + 1)."""
    for a in degree_ten_series:
        expected = _poly_cesaro(to_monomial(a, 2))
        mean = cesaro_mean(_series(a))
        for t in ORACLE_POINTS:
            assert cheb_eval(mean, t).contains(_poly_eval(expected, t))


@pytest.mark.parametrize("n", range(2, 7))
def test_cesaro_mean_of_single_chebyshev_polynomial(n):
    """Test the mean of T_n(2t/T - 1) on [0, 3] against its symbolic value."""
    standard = [0] * n + [1]
    expected = _poly_cesaro(to_monomial(standard, 3))
    mean = cesaro_mean(_series(standard, T=3))
    for t in (Fraction(1, 4), Fraction(1), Fraction(5, 2), Fraction(3)):
        assert cheb_eval(mean, t).contains(_poly_eval(expected, t))
