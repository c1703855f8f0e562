"""
Test Suite for the Taylor propagation of the singular system
"""

import math

import pytest

from cohom1.errors import DomainError
from cohom1.numerics.precision import context
from cohom1.solvers.system import Params, first_integral, integral_target, round_oracle, round_stopping_time, round_w
from cohom1.solvers.taylor import (
    derivative_recursion,
    dump_patches,
    estimate_radius,
    evaluate,
    extend,
    frobenius_origin,
    load_patches,
    normalized_recursion,
    path_integral,
    path_w,
    propagate,
    term_count,
)

D_TARGET = 20


# ---------------------------
# Fixtures
# ---------------------------

@pytest.fixture(scope="module")
def round_path():
    """Round metric of the (2, 9) system (alpha = 1) on [0, 1]."""
    return propagate(Params(2, 9), 1, "1.0", D_TARGET)


@pytest.fixture(scope="module")
def mirrored_round_path():
    """Round metric of the mirrored (9, 2) system (omega = sqrt 8) on [0, 0.43]."""
    ctx = context(40)
    return propagate(Params(9, 2), ctx.sqrt(8), "0.43", D_TARGET)


# ---------------------------
# Term Count and Radius Tests
# ---------------------------

def test_term_count():
    """Test N = ceil((d + 2) log2 10)."""
    assert term_count(30) == 107
    assert term_count(20) == 74


def test_estimate_radius_of_geometric_series():
    """Test that c_k = 0.5^k gives radius 2 rho."""
    coeffs = [tuple([0.5 ** k] * 5) for k in range(20)]
    assert estimate_radius(coeffs, 1) == pytest.approx(2.0)
    assert estimate_radius(coeffs, 0.5) == pytest.approx(1.0)


def test_estimate_radius_of_polynomial():
    """Test that vanishing tail coefficients give an infinite radius."""
    coeffs = [(1, 0, 0, 0, 0)] + [(0, 0, 0, 0, 0)] * 10
    assert math.isinf(estimate_radius(coeffs, 1))


def test_estimate_radius_needs_six_coefficients():
    """Test that short series are rejected."""
    with pytest.raises(DomainError):
        estimate_radius([(1, 1, 1, 1, 1)] * 5, 1)


# ---------------------------
# Origin Tests
# ---------------------------

def test_frobenius_origin_initial_state():
    """Test that the origin patch starts at (0, 0, 0, alpha, sqrt(lambda))."""
    p = Params(2, 9, 1)
    patch = frobenius_origin(p, 40, "0.3", 40)
    ctx = context(40)
    c0 = patch.coeffs[0]
    assert c0[:3] == (0, 0, 0)
    assert c0[3] == 1
    assert abs(c0[4] - ctx.sqrt(11)) < ctx.mpf(10) ** -38
    assert patch.center == 0
    assert patch.valid_to > 0


def test_frobenius_first_coefficient():
    """Test c_1 = rho (I - L)^{-1} B(c_0, c_0) for alpha^2 - 11 = 5."""
    patch = frobenius_origin(Params(2, 9, 4), 40, 1, 40)
    ctx = context(40)
    expected = (0, 1, -3, 0, 0)
    for got, want in zip(patch.coeffs[1], expected):
        assert abs(got - want) < ctx.mpf(10) ** -35


def test_frobenius_origin_parity():
    """Test that eta1 is even while eta2 and eta3 are odd in t."""
    patch = frobenius_origin(Params(2, 9, "6.08"), 30, "0.3", 40)
    ctx = context(40)
    for k, c in enumerate(patch.coeffs):
        scale = max(1, max(abs(v) for v in c[:3]))
        vanishing = (0,) if k % 2 else (1, 2)
        for i in vanishing:
            assert abs(c[i]) <= ctx.mpf(10) ** -35 * scale, (k, i)


def test_frobenius_origin_rejects_bad_rho():
    """Test that a non-positive rho raises DomainError."""
    with pytest.raises(DomainError):
        frobenius_origin(Params(2, 9, 1), 40, 0, 40)


# ---------------------------
# Recursion Tests
# ---------------------------

def test_normalized_recursion_matches_patch(round_path):
    """Test the standalone recursion against the coefficients of a later patch."""
    patch = round_path.patches[1]
    ctx = round_path.ctx
    for m in (0, 3, 8):
        nxt = normalized_recursion(round_path.params, patch.center, patch.coeffs[: m + 1], patch.rho, 40)
        for i in range(3):
            assert abs(nxt[i] - patch.coeffs[m + 1][i]) < ctx.mpf(10) ** -30


def test_normalized_recursion_rejects_origin():
    """Test that the singular origin needs the Frobenius start."""
    with pytest.raises(DomainError):
        normalized_recursion(Params(2, 9, 1), 0, [[0, 0, 0, 1, 3]], "0.3")


def test_derivative_recursion_second_derivative():
    """Test eta2'' = -4 sec^2 t tan t on the round metric."""
    p = Params(2, 9, 1)
    ctx = context(40)
    t = ctx.mpf("0.6")
    value = round_oracle(p, t, 40)
    first = derivative_recursion(p, t, [value], 40)
    second = derivative_recursion(p, t, [value, first], 40)
    assert abs(first[1] + 2 * ctx.sec(t) ** 2) < ctx.mpf(10) ** -30
    assert abs(second[1] + 4 * ctx.sec(t) ** 2 * ctx.tan(t)) < ctx.mpf(10) ** -30


# ---------------------------
# Propagation Tests
# ---------------------------

@pytest.mark.parametrize("t", ["0.05", "0.3", "0.8", "1.0"])
def test_round_metric_reproduced(round_path, t):
    """Test the propagated round metric against the closed form."""
    ctx = round_path.ctx
    p = Params(2, 9)
    got = evaluate(round_path, t)
    want = round_oracle(p, ctx.mpf(t), 40)
    for i in range(5):
        assert abs(got[i] - want[i]) < ctx.mpf(10) ** -12


def test_round_metric_derivative(round_path):
    """Test eta2' = -2 sec^2 t on the round metric."""
    ctx = round_path.ctx
    t = ctx.mpf("0.6")
    assert abs(evaluate(round_path, t, 1)[1] + 2 * ctx.sec(t) ** 2) < ctx.mpf(10) ** -12


def test_mirrored_round_metric(mirrored_round_path):
    """Test the (9, 2) round metric from the other singular orbit."""
    ctx = mirrored_round_path.ctx
    p = Params(9, 2)
    t = ctx.mpf("0.4")
    got = evaluate(mirrored_round_path, t)
    want = round_oracle(p, t, 40)
    for i in range(3):
        assert abs(got[i] - want[i]) < ctx.mpf(10) ** -12


def test_path_w_on_round_metric(round_path):
    """Test W(t) = sqrt(8) / sin t along the round metric."""
    ctx = round_path.ctx
    t = ctx.mpf("0.9")
    assert abs(path_w(round_path, t) - round_w(Params(2, 9), t, 40)) < ctx.mpf(10) ** -12


def test_path_integral_of_eta2(round_path):
    """Test integral_0^t -2 tan s ds = 2 log cos t."""
    ctx = round_path.ctx
    t = ctx.mpf("0.7")
    assert abs(path_integral(round_path, t)[1] - 2 * ctx.log(ctx.cos(t))) < ctx.mpf(10) ** -12


def test_conserved_quantity_off_round():
    """Test the first integral stays at 110 for a non-round slope."""
    path = propagate(Params(2, 9), "1.5", "0.8", D_TARGET)
    ctx = path.ctx
    for t in ("0.2", "0.5", "0.8"):
        t = ctx.mpf(t)
        value = first_integral(path.params, t, evaluate(path, t), path_w(path, t))
        assert abs(value - 110) < ctx.mpf(10) ** -10


def test_first_integral_drift():
    """Test the conserved quantity on a 40-point grid over [1e-3, t_end]."""
    path = propagate(Params(2, 9), "1.5", "0.8", D_TARGET)
    ctx = path.ctx
    start, end = ctx.mpf("0.001"), ctx.mpf("0.8")
    target = integral_target(path.params)
    tol = ctx.mpf(10) ** (-D_TARGET + 10)
    for k in range(40):
        t = start + (end - start) * k / 39
        value = first_integral(path.params, t, evaluate(path, t), path_w(path, t))
        assert abs(value - target) <= tol, float(t)


def test_constant_components_stay_fixed():
    """Test that alpha and sqrt(lambda) are carried unchanged across patches."""
    path = propagate(Params(2, 9), "1.5", "0.8", D_TARGET)
    ctx = path.ctx
    assert len(path.patches) > 1
    for t in ("0.01", "0.4", "0.8"):
        values = evaluate(path, t)
        assert abs(values[3] - ctx.mpf("1.5")) < ctx.mpf(10) ** -30
        assert abs(values[4] - ctx.sqrt(11)) < ctx.mpf(10) ** -30
        assert abs(evaluate(path, t, 1)[3]) < ctx.mpf(10) ** -30


@pytest.mark.parametrize("d1,d2", [(2, 9), (3, 8), (4, 7), (5, 6)])
def test_round_metric_grid(d1, d2):
    """Test the round metric of each system at 50 points up to its stopping time."""
    p = Params(d1, d2)
    ctx = context(40)
    t_stop = round_stopping_time(p, 40)
    path = propagate(p, ctx.sqrt(d1 - 1), t_stop, D_TARGET)
    start = ctx.mpf("0.02")
    tol = ctx.mpf(10) ** (-D_TARGET + 8)
    for k in range(50):
        t = start + (t_stop - start) * (k + ctx.mpf(1) / 2) / 50
        got = evaluate(path, t)
        want = round_oracle(p, t, 40)
        for i in range(3):
            assert abs(got[i] - want[i]) < tol, (float(t), i)


def test_extend_keeps_the_original_path(round_path):
    """Test that extend returns a longer path and leaves the input alone."""
    patches = len(round_path.patches)
    longer = extend(round_path, "1.2")
    assert longer.t_end >= 1.2
    assert len(round_path.patches) == patches
    assert len(longer.patches) > patches


def test_propagate_rejects_non_positive_end():
    """Test that t_end <= 0 raises DomainError."""
    with pytest.raises(DomainError):
        propagate(Params(2, 9), 1, 0, D_TARGET)


def test_evaluate_outside_coverage(round_path):
    """Test that times past the covered interval raise DomainError."""
    with pytest.raises(DomainError):
        evaluate(round_path, "5")


def test_evaluate_rejects_second_derivative(round_path):
    """Test that only orders 0 and 1 are available."""
    with pytest.raises(DomainError):
        evaluate(round_path, "0.5", 2)


# ---------------------------
# Serialization Tests
# ---------------------------

def test_dump_and_load_patches(round_path):
    """Test that a coefficient dump rebuilds the same path."""
    records = dump_patches(round_path)
    assert len(records) == len(round_path.patches)
    assert records[0]["center"].endswith("@40")
    restored = load_patches(records, Params(2, 9), D_TARGET)
    ctx = round_path.ctx
    t = ctx.mpf("0.75")
    for a, b in zip(evaluate(restored, t), evaluate(round_path, t)):
        assert abs(a - b) < ctx.mpf(10) ** -30


def test_load_patches_requires_records():
    """Test that an empty dump is rejected."""
    with pytest.raises(DomainError):
        load_patches([], Params(2, 9), D_TARGET)
