"""
Certificate Module
Evaluates the computable inequality chain of the existence proof on measured
data: embedding constants, the C^k bounds of the fitted solutions, the
Gronwall constant M, the epsilon thresholds and the inverse shooting
Jacobian. Everything runs in ball arithmetic at 50 digits.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from cohom1.errors import CertificateError, DomainError
from cohom1.numerics.precision import (
    Ball,
    ball_exp,
    ball_log,
    ball_log10,
    ball_sqrt,
    decimal_up,
    digits_to_bits,
    to_fraction,
)
from cohom1.proof.reference import CheckItem, ReferenceValues, exact, upper_of
from cohom1.solvers.shooting import LinearizationResult
from cohom1.solvers.system import Params, btermok_constant

logger = logging.getLogger(__name__)

CERT_DIGITS = 50
PREC = digits_to_bits(CERT_DIGITS)

EMBED_LIMIT = Fraction(3, 2)
VANISHING_FACTOR = Fraction(5, 4)
C2_FACTOR = 6


def _ball(value: Any) -> Ball:
    if isinstance(value, Ball):
        return value
    return Ball.exact(exact(value), PREC)


def round_up_tenth(value: Any) -> Fraction:
    """Smallest multiple of 0.1 that is >= value (upper end for balls)."""
    bound = upper_of(value) if isinstance(value, Ball) else exact(value)
    tenths = bound * 10
    return Fraction(-((-tenths.numerator) // tenths.denominator), 10)


# =============================================================================
# Embeddings and C^k bounds
# =============================================================================

def embed_c0_from_h1(h1: Any, t_star: Any) -> Ball:
    """|f|_C0 <= 2 |f|_H1 on [0, t_star] for t_star < 1.5."""
    if exact(t_star) >= EMBED_LIMIT:
        raise DomainError(f"The C0 embedding needs t_star < 1.5, got {float(exact(t_star))}")
    return _ball(h1) * 2


def embed_c0_vanishing(h1: Any) -> Fraction:
    """|f|_C0 <= (5/4) |f'|_L2 <= (5/4) |f|_H1 for f(0) = 0, rounded up to 0.1."""
    return round_up_tenth(VANISHING_FACTOR * upper_of(h1))


def _root_sum_square(values: Sequence[Fraction], extra: Fraction = Fraction(0)) -> Fraction:
    total = sum((v * v for v in values), Fraction(0)) + extra
    return round_up_tenth(ball_sqrt(Ball.exact(total, PREC)))


@dataclass(frozen=True)
class CkBounds:
    """C0, C1, C2 bounds of one fitted solution with the per-component pieces."""

    c0: Fraction
    c1: Fraction
    c2: Fraction
    components: Dict[str, List[Fraction]] = field(default_factory=dict)

    def as_list(self) -> List[Fraction]:
        return [self.c0, self.c1, self.c2]


def hat_ck_chain(norms: Sequence[Sequence[Any]], constant: Any, lam: int) -> CkBounds:
    """
    C^k bounds of eta_hat (or zeta_hat) from component Sobolev norms.

    Args:
        norms: per component [L2, H1, H2, H3] bounds (components 1..3)
        constant: alpha_hat (or omega_hat), the constant fourth component
        lam: Einstein constant, the square of the fifth component

    Each component value is bounded by (5/4) H1, its first derivative by 2 H2
    and its second derivative by 2 H3, each rounded up to 0.1; the vector
    bounds are root-sum-squares with the constant components in C0 only.
    """
    values = [embed_c0_vanishing(row[1]) for row in norms]
    first = [round_up_tenth(2 * upper_of(row[2])) for row in norms]
    second = [round_up_tenth(2 * upper_of(row[3])) for row in norms]
    c0 = _root_sum_square(values, exact(constant) ** 2 + lam)
    c1 = c0 + _root_sum_square(first)
    c2 = c1 + _root_sum_square(second)
    return CkBounds(c0, c1, c2, {"values": values, "first": first, "second": second})


def ic_c2_bound(h3_norms: Sequence[Any]) -> Fraction:
    """|mu_IC|_C2 <= 6 |mu_IC - (0,0,0,1,0)|_H3 + 1."""
    total = sum((upper_of(v) ** 2 for v in h3_norms), Fraction(0))
    root = to_fraction(ball_sqrt(Ball.exact(total, PREC)).upper())
    return C2_FACTOR * root + 1


def error_c2(epsilon: Any) -> Fraction:
    """C2 bound 6 epsilon of an error term whose H3 norm is below epsilon."""
    return C2_FACTOR * exact(epsilon)


# =============================================================================
# Gronwall constant
# =============================================================================

def l2_vector(component_l2: Sequence[Any], constant: Any, lam: int) -> List[Fraction]:
    """Five L2-type weights: three measured norms, |constant| and sqrt(lambda) (rounded up)."""
    root = to_fraction(ball_sqrt(Ball.exact(lam, PREC)).upper())
    return [upper_of(v) for v in component_l2] + [abs(exact(constant)), root]


def gronwall_integral(p: Params, weights: Sequence[Any], window: Any) -> Ball:
    """
    Upper bound of integral (4 C(d1, d2, y) + 1) over a window of length ell,
    with Cauchy-Schwarz factor sqrt(ell) on every weight.
    """
    ell = _ball(window)
    c = btermok_constant(p, [upper_of(w) for w in weights])
    return ell + ball_sqrt(ell) * Ball.exact(4 * c, PREC)


@dataclass(frozen=True)
class GronwallBound:
    integral_eta: Ball
    integral_zeta: Ball
    exponent: int
    tight_log: Ball

    @property
    def M(self) -> Ball:
        return ball_exp(Ball.exact(self.exponent, PREC))

    @property
    def log10_M(self) -> Ball:
        return Ball.exact(self.exponent, PREC) / _ln10()


def _ln10() -> Ball:
    return ball_log(Ball.exact(10, PREC))


def gronwall_M(
    eta_weights: Sequence[Any],
    zeta_weights: Sequence[Any],
    reference: Optional[ReferenceValues] = None,
    p: Optional[Params] = None,
) -> GronwallBound:
    """
    Both Gronwall integrals and M = e^250.

    Raises:
        CertificateError: an integral exceeds the constant the proof uses
    """
    reference = reference or ReferenceValues()
    p = p or Params(2, 9)
    i_eta = gronwall_integral(p, eta_weights, reference.constant("gronwall_window_eta"))
    i_zeta = gronwall_integral(Params(p.d2, p.d1), zeta_weights, reference.constant("gronwall_window_zeta"))
    limit_eta = reference.constant("gronwall_eta")
    limit_zeta = reference.constant("gronwall_zeta")
    if to_fraction(i_eta.upper()) > limit_eta:
        raise CertificateError(f"Gronwall integral {float(i_eta.upper()):.2f} exceeds {float(limit_eta)}")
    if to_fraction(i_zeta.upper()) > limit_zeta:
        raise CertificateError(f"Gronwall integral {float(i_zeta.upper()):.2f} exceeds {float(limit_zeta)}")
    worst = i_eta if i_eta.upper() > i_zeta.upper() else i_zeta
    exponent = int(reference.constants["gronwall_exponent"])
    logger.info(
        f"[CERTIFY] Gronwall integrals {float(i_eta.upper()):.2f} / {float(i_zeta.upper()):.2f}, "
        f"tight M = e^{float(worst.upper()) / 2:.1f}, proof uses e^{exponent}"
    )
    return GronwallBound(i_eta, i_zeta, exponent, worst / 2)


# =============================================================================
# Jacobian
# =============================================================================

def jacobian_inverse_norm(J: Sequence[Sequence[Any]]) -> Ball:
    """Frobenius norm of the inverse of a 2x2 matrix, in ball arithmetic."""
    a, b = _ball(J[0][0]), _ball(J[0][1])
    c, d = _ball(J[1][0]), _ball(J[1][1])
    det = a * d - b * c
    if det.contains_zero():
        raise DomainError("Shooting Jacobian is not provably invertible")
    adj = a ** 2 + b ** 2 + c ** 2 + d ** 2
    return ball_sqrt(adj) / abs(det)


# =============================================================================
# Thresholds and verdict
# =============================================================================

THRESHOLDS: Tuple[Tuple[str, int, Fraction], ...] = (
    ("M^2 eps <= 1/200", 2, Fraction(1, 200)),
    ("M^2 eps <= 1e-20", 2, Fraction(1, 10 ** 20)),
    ("M^2 eps <= 1e-40", 2, Fraction(1, 10 ** 40)),
    ("M^2 eps <= 1e-50", 2, Fraction(1, 10 ** 50)),
    ("M eps <= 1e-50", 1, Fraction(1, 10 ** 50)),
)


@dataclass(frozen=True)
class ThresholdItem:
    name: str
    required_log10: Ball
    achieved_log10: Ball
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "required_log10": f"{float(self.required_log10.mid):.4f}",
            "achieved_log10": f"{float(self.achieved_log10.upper()):.4f}",
            "pass": self.passed,
        }


def threshold_items(epsilon: Any, exponent: int, final_epsilon: Any) -> List[ThresholdItem]:
    """
    M^k eps <= bound comparisons in log10 (M = e^exponent), plus eps < final_epsilon.

    A zero epsilon passes everything.
    """
    eps = exact(epsilon)
    ln10 = _ln10()
    log_m = Ball.exact(exponent, PREC) / ln10
    items = []
    if eps == 0:
        log_eps = None
    else:
        log_eps = ball_log10(Ball.exact(eps, PREC))
    for name, power, bound in THRESHOLDS:
        required = ball_log10(Ball.exact(bound, PREC))
        if log_eps is None:
            items.append(ThresholdItem(name, required, required, True))
            continue
        achieved = log_m * power + log_eps
        items.append(ThresholdItem(name, required, achieved, achieved.upper() <= required.lower()))
    final = exact(final_epsilon)
    required = ball_log10(Ball.exact(final, PREC))
    achieved = log_eps if log_eps is not None else required
    items.append(ThresholdItem(f"eps < {decimal_up(final, 1)}", required, achieved, eps < final))
    return items


@dataclass(frozen=True)
class Certificate:
    """All measured bounds, derived constants and the existence verdict."""

    epsilon: Fraction
    ck_bounds: Dict[str, CkBounds]
    ic_c2_bound: Dict[str, Fraction]
    error_c2: Fraction
    gronwall: GronwallBound
    thresholds: List[ThresholdItem]
    jacobian_inv_norm: Ball
    checks: List[CheckItem] = field(default_factory=list)

    @property
    def final_verdict(self) -> bool:
        return all(t.passed for t in self.thresholds) and all(c.passed for c in self.checks)


def build_certificate(
    epsilon: Any,
    eta_norms: Sequence[Sequence[Any]],
    zeta_norms: Sequence[Sequence[Any]],
    mu_h3: Sequence[Any],
    nu_h3: Sequence[Any],
    alpha: Any,
    omega: Any,
    J: Sequence[Sequence[Any]],
    assumptions_passed: bool = True,
    reference: Optional[ReferenceValues] = None,
    p: Optional[Params] = None,
) -> Certificate:
    """
    Evaluate the whole chain on explicit inputs.

    Args:
        epsilon: common bound of all assumption items
        eta_norms, zeta_norms: per component [L2, H1, H2, H3]
        mu_h3, nu_h3: H3 norms of the linearized solutions' first three components
        alpha, omega: the heuristic shooting parameters
        J: 2x2 shooting Jacobian (A1 | -Omega1)
        assumptions_passed: verdict of both assumption checks at epsilon
    """
    reference = reference or ReferenceValues()
    p = p or Params(2, 9)
    ck = {
        "eta": hat_ck_chain(eta_norms, alpha, p.lam),
        "zeta": hat_ck_chain(zeta_norms, omega, p.lam),
    }
    ic = {"mu": ic_c2_bound(mu_h3), "nu": ic_c2_bound(nu_h3)}
    gronwall = gronwall_M(
        l2_vector([row[0] for row in eta_norms], alpha, p.lam),
        l2_vector([row[0] for row in zeta_norms], omega, p.lam),
        reference,
        p,
    )
    thresholds = threshold_items(epsilon, gronwall.exponent, reference.constant("epsilon_final"))
    inv_norm = jacobian_inverse_norm(J)
    ic_limit = reference.constant("ic_c2")
    j_limit = reference.constant("jacobian_inverse")
    inv_upper = upper_of(inv_norm)
    checks = [
        CheckItem("ic_c2.mu", ic["mu"], ic_limit, ic["mu"] <= ic_limit),
        CheckItem("ic_c2.nu", ic["nu"], ic_limit, ic["nu"] <= ic_limit),
        CheckItem("jacobian_inverse", inv_upper, j_limit, inv_upper <= j_limit),
        CheckItem("assumptions", Fraction(0), Fraction(0), bool(assumptions_passed)),
    ]
    cert = Certificate(
        epsilon=exact(epsilon),
        ck_bounds=ck,
        ic_c2_bound=ic,
        error_c2=error_c2(epsilon),
        gronwall=gronwall,
        thresholds=thresholds,
        jacobian_inv_norm=inv_norm,
        checks=checks,
    )
    logger.info(f"[CERTIFY] |J^-1| <= {float(inv_upper):.1f}, verdict {'PASS' if cert.final_verdict else 'FAIL'}")
    return cert


def final_verdict(report, lin: LinearizationResult, epsilon: Any = None, assumptions_passed: bool = True) -> Certificate:
    """
    Certificate from a ResidualReport and a LinearizationResult.

    epsilon defaults to the report's largest bound.
    """
    if not report.linearized:
        raise DomainError("The report carries no linearized fits; run verify with a linearization")
    eps = report.epsilon_achieved if epsilon is None else exact(epsilon)
    return build_certificate(
        eps,
        report.sobolev["eta"],
        report.sobolev["zeta"],
        report.linearized["mu_h3"],
        report.linearized["nu_h3"],
        report.alpha,
        report.omega,
        lin.J,
        assumptions_passed=assumptions_passed,
        p=report.params,
    )
