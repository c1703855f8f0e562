"""
Verification Module
Rigorous a posteriori residuals of the fitted heuristic solutions and the
itemized checks of both assumptions the existence proof needs.

The fitted objects are HatFunctions: a start vector plus a Chebyshev fit of
the derivative. Values, Cesaro means and residuals are then built entirely
inside the ball algebra, so every reported bound encloses the quantity of
the fitted functions themselves.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

from cohom1.errors import DomainError
from cohom1.numerics.chebyshev import (
    ChebVec,
    cesaro_mean,
    cheb_bilinear,
    cheb_eval,
    cheb_integrate,
    fit_vec,
    hk_norm,
    norms_from_terms,
    sobolev_terms,
)
from cohom1.numerics.precision import (
    Ball,
    ball_sqrt,
    ball_sqrt_clamped,
    context,
    decimal_up,
    digits_to_bits,
    to_fraction,
    working_digits,
)
from cohom1.proof.reference import CheckItem, ReferenceValues
from cohom1.solvers.shooting import STOP_MARGIN, LinearizationResult, ShotResult
from cohom1.solvers.system import Params, apply_L
from cohom1.solvers.taylor import SolutionPath, evaluate, extend
from cohom1.utils.config import THREADS

logger = logging.getLogger(__name__)

SOBOLEV_ORDER = 3
NORM_NAMES = ("L2", "H1", "H2", "H3")


def default_nodes(digits: int) -> int:
    """N = 3d + 1 Chebyshev nodes for d decimal places."""
    return 3 * int(digits) + 1


# =============================================================================
# Hat functions
# =============================================================================

@dataclass(frozen=True)
class HatFunction:
    """
    eta_hat = start + integral_0^t slope.

    Components with a constant start (alpha, sqrt(lambda)) have a zero slope,
    so eta_hat_i(0) = start_i holds by construction.
    """

    start: Tuple[Ball, ...]
    slope: ChebVec

    @property
    def T(self):
        return self.slope.T

    @property
    def digits(self) -> int:
        return self.slope.digits

    @cached_property
    def value(self) -> ChebVec:
        return ChebVec([cheb_integrate(s) + b for s, b in zip(self.slope, self.start)])

    @cached_property
    def cesaro(self) -> ChebVec:
        """(1/t) integral_0^t slope, i.e. (eta_hat(t) - eta_hat(0)) / t."""
        return self.slope.map(cesaro_mean)

    def at(self, t, components: Sequence[int] = (0, 1, 2)) -> List[Ball]:
        return [cheb_eval(self.value[i], t) for i in components]

    def slope_at(self, t, components: Sequence[int] = (0, 1, 2)) -> List[Ball]:
        return [cheb_eval(self.slope[i], t) for i in components]


def _start_balls(values: Sequence, digits: int) -> Tuple[Ball, ...]:
    prec = digits_to_bits(digits)
    return tuple(v if isinstance(v, Ball) else Ball.exact(v, prec) for v in values)


def eta_start(p: Params, alpha, digits: int) -> Tuple[Ball, ...]:
    """(0, 0, 0, alpha, sqrt(lambda)) with sqrt(lambda) enclosed."""
    prec = digits_to_bits(digits)
    root = ball_sqrt(Ball.exact(p.lam, prec))
    return _start_balls([0, 0, 0, Ball.exact(alpha, prec), root], digits)


def fit_hat(path: SolutionPath, T, N: int, digits: int, start: Optional[Sequence] = None) -> HatFunction:
    """Fit the derivative of a heuristic path on [0, T] and wrap it as a HatFunction."""
    if path.t_end < T:
        path = extend(path, T)
    slope = fit_vec(lambda t: evaluate(path, t, 1), N, T, digits)
    if start is None:
        start = eta_start(path.params, path.params.alpha, digits)
    return HatFunction(_start_balls(start, digits), slope)


def fit_linearized(path_plus: SolutionPath, path_minus: SolutionPath, delta, T, N: int, digits: int) -> HatFunction:
    """
    Central-difference derivative of two perturbed paths, fitted on [0, T];
    the start is the linearized initial condition (0, 0, 0, 1, 0).
    """
    if path_plus.t_end < T:
        path_plus = extend(path_plus, T)
    if path_minus.t_end < T:
        path_minus = extend(path_minus, T)
    ctx = context(digits)
    two_delta = 2 * ctx.convert(delta)

    def sampler(t):
        up, down = evaluate(path_plus, t, 1), evaluate(path_minus, t, 1)
        return [(up[i] - down[i]) / two_delta for i in range(5)]

    slope = fit_vec(sampler, N, T, digits)
    return HatFunction(_start_balls([0, 0, 0, 1, 0], digits), slope)


# =============================================================================
# Residuals
# =============================================================================

def _apply_L(p: Params, vec: ChebVec) -> ChebVec:
    return ChebVec(apply_L(p, list(vec)))


def residual_E1(hat: HatFunction, p: Params) -> ChebVec:
    """L (1/t) integral upsilon + B(eta_hat, eta_hat) - upsilon, with upsilon = hat.slope."""
    return _apply_L(p, hat.cesaro) + cheb_bilinear(p, hat.value, hat.value) - hat.slope


def residual_E2(mu: HatFunction, eta: HatFunction, p: Params) -> ChebVec:
    """mu_hat' - (1/t) L mu_hat - 2 B(eta_hat, mu_hat)."""
    if mu.T != eta.T:
        raise DomainError("Linearized and base fits must share a domain")
    return mu.slope - _apply_L(p, mu.cesaro) - cheb_bilinear(p, eta.value, mu.value).scale(2)


def residual_norm(residual: ChebVec, t_end=None) -> Ball:
    """H^3 enclosure of a residual over [0, t_end] (default: the whole domain)."""
    t_end = residual.T if t_end is None else t_end
    return hk_norm(list(residual), SOBOLEV_ORDER, t_end)


def component_norms(hat: HatFunction, t_end=None, components: Sequence[int] = (0, 1, 2)) -> List[List[Ball]]:
    """[L2, H1, H2, H3] enclosures of each requested component of eta_hat."""
    t_end = hat.T if t_end is None else t_end
    return [norms_from_terms(sobolev_terms([hat.value[i]], SOBOLEV_ORDER, t_end)) for i in components]


def stop_error(hat: HatFunction, p: Params, t_hat) -> Ball:
    """|d2 / t_hat + eta_hat3(t_hat)| as a ball."""
    prec = digits_to_bits(hat.digits)
    t = Ball.exact(t_hat, prec)
    return abs(Ball.exact(p.d2, prec) / t + cheb_eval(hat.value[2], t))


def shooting_gap(eta: HatFunction, zeta: HatFunction, p: Params, alpha, omega, t_alpha, t_omega) -> Ball:
    """
    |A_hat(alpha) - Omega_hat(omega)| with
    A = (sqrt(((d1+d2-1) lambda - d1 X^2 - (1/d1 + 1/d2) Y^2) / d2), Y), X = alpha + eta1, Y = eta2,
    Omega = (omega + zeta1, zeta2), all in ball arithmetic.
    """
    prec = digits_to_bits(eta.digits)
    e1, e2, _ = eta.at(Ball.exact(t_alpha, prec))
    z1, z2, _ = zeta.at(Ball.exact(t_omega, prec))
    x = Ball.exact(alpha, prec) + e1
    arg = (
        (p.d1 + p.d2 - 1) * p.lam
        - p.d1 * x * x
        - Ball.exact(Fraction(1, p.d1) + Fraction(1, p.d2), prec) * e2 ** 2
    ) / p.d2
    if arg.upper() <= 0:
        raise DomainError("W^2 is not positive at the fitted stopping time")
    w = ball_sqrt(arg)
    gap_sq = (w - Ball.exact(omega, prec) - z1) ** 2 + (e2 - z2) ** 2
    return ball_sqrt_clamped(gap_sq)


# =============================================================================
# Fit bundle and report
# =============================================================================

@dataclass(frozen=True)
class FitBundle:
    """All fitted objects one verification needs; serializable between stages."""

    params: Params
    digits: int
    N: int
    alpha: Any
    omega: Any
    t_alpha: Any
    t_omega: Any
    eta: HatFunction
    zeta: HatFunction
    mu: Optional[HatFunction] = None
    nu: Optional[HatFunction] = None


@dataclass(frozen=True)
class ResidualReport:
    """Upper enclosures of every quantity the two assumptions bound."""

    params: Params
    digits: int
    N: int
    alpha: Any
    omega: Any
    t_alpha: Any
    t_omega: Any
    e1_start_h3: Ball
    e1_end_h3: Ball
    shoot_gap: Ball
    stop_err_alpha: Ball
    stop_err_omega: Ball
    endpoints: Dict[str, List[Ball]]
    sobolev: Dict[str, List[List[Ball]]]
    e2_start_h3: Optional[Ball] = None
    e2_end_h3: Optional[Ball] = None
    linearized: Dict[str, List[Ball]] = field(default_factory=dict)
    linearized_start: Dict[str, Tuple[Ball, ...]] = field(default_factory=dict)
    table_deltas: List[CheckItem] = field(default_factory=list)

    def bounds(self) -> Dict[str, Ball]:
        items = {
            "e1_start_h3": self.e1_start_h3,
            "e1_end_h3": self.e1_end_h3,
            "shoot_gap": self.shoot_gap,
            "stop_err_alpha": self.stop_err_alpha,
            "stop_err_omega": self.stop_err_omega,
            "e2_start_h3": self.e2_start_h3,
            "e2_end_h3": self.e2_end_h3,
        }
        return {k: v for k, v in items.items() if v is not None}

    @property
    def epsilon_achieved(self) -> Fraction:
        """Largest upper bound among all itemized residual quantities."""
        return max(to_fraction(b.mag()) for b in self.bounds().values())


def fit_bundle(
    shot_a: ShotResult,
    shot_o: ShotResult,
    digits: int,
    lin: Optional[LinearizationResult] = None,
    N: Optional[int] = None,
) -> FitBundle:
    """
    Step II fits on [0, t_hat + 1e-3] for both sides, and the linearized
    fits when a linearization is supplied.
    """
    N = N or default_nodes(digits)
    wd = working_digits(digits)
    ctx = context(wd)
    margin = ctx.mpf(STOP_MARGIN)
    p = Params(shot_a.params.d1, shot_a.params.d2)
    t_a, t_o = ctx.convert(shot_a.t_stop), ctx.convert(shot_o.t_stop)
    T_a, T_o = t_a + margin, t_o + margin
    logger.info(f"[VERIFY] fitting N={N} on [0, {float(T_a):.7f}] and [0, {float(T_o):.7f}] at {wd} digits")

    jobs = {
        "eta": lambda: fit_hat(shot_a.path, T_a, N, wd),
        "zeta": lambda: fit_hat(shot_o.path, T_o, N, wd),
    }
    if lin is not None:
        shots = lin.shots
        T_la = ctx.convert(shots["alpha"].t_stop) + margin
        T_lo = ctx.convert(shots["omega"].t_stop) + margin
        tol = ctx.mpf(10) ** -digits
        if abs(T_la - T_a) > tol or abs(T_lo - T_o) > tol:
            raise DomainError(
                "The linearization was computed at other stopping times "
                f"(t_alpha {float(T_la - margin):.10f} vs {float(t_a):.10f}, "
                f"t_omega {float(T_lo - margin):.10f} vs {float(t_o):.10f}); "
                "linearize the same solution that is being fitted"
            )
        jobs["mu"] = lambda: fit_linearized(shots["alpha_plus"].path, shots["alpha_minus"].path, lin.delta, T_a, N, wd)
        jobs["nu"] = lambda: fit_linearized(shots["omega_plus"].path, shots["omega_minus"].path, lin.delta, T_o, N, wd)

    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        futures = {key: pool.submit(job) for key, job in jobs.items()}
        fits = {key: fut.result() for key, fut in futures.items()}

    return FitBundle(
        params=p,
        digits=digits,
        N=N,
        alpha=ctx.convert(shot_a.parameter),
        omega=ctx.convert(shot_o.parameter),
        t_alpha=t_a,
        t_omega=t_o,
        eta=fits["eta"],
        zeta=fits["zeta"],
        mu=fits.get("mu"),
        nu=fits.get("nu"),
    )


def assess(bundle: FitBundle, reference: Optional[ReferenceValues] = None) -> ResidualReport:
    """Compute every residual, endpoint and norm enclosure of a FitBundle."""
    reference = reference or ReferenceValues()
    p = bundle.params
    q = p.mirrored(bundle.omega)
    prec = digits_to_bits(bundle.eta.digits)
    t_a, t_o = Ball.exact(bundle.t_alpha, prec), Ball.exact(bundle.t_omega, prec)

    jobs = {
        "e1_start": lambda: residual_norm(residual_E1(bundle.eta, p)),
        "e1_end": lambda: residual_norm(residual_E1(bundle.zeta, q)),
        "eta_norms": lambda: component_norms(bundle.eta),
        "zeta_norms": lambda: component_norms(bundle.zeta),
    }
    if bundle.mu is not None and bundle.nu is not None:
        jobs["e2_start"] = lambda: residual_norm(residual_E2(bundle.mu, bundle.eta, p))
        jobs["e2_end"] = lambda: residual_norm(residual_E2(bundle.nu, bundle.zeta, q))
        jobs["mu_norms"] = lambda: component_norms(bundle.mu)
        jobs["nu_norms"] = lambda: component_norms(bundle.nu)

    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        futures = {key: pool.submit(job) for key, job in jobs.items()}
        out = {key: fut.result() for key, fut in futures.items()}

    endpoints = {
        "eta": bundle.eta.at(t_a),
        "eta_prime": bundle.eta.slope_at(t_a),
        "zeta": bundle.zeta.at(t_o),
        "zeta_prime": bundle.zeta.slope_at(t_o),
    }
    sobolev = {"eta": out["eta_norms"], "zeta": out["zeta_norms"]}
    linearized: Dict[str, List[Ball]] = {}
    starts: Dict[str, Tuple[Ball, ...]] = {}
    if "mu_norms" in out:
        linearized = {
            "mu": bundle.mu.at(t_a),
            "mu_prime": bundle.mu.slope_at(t_a),
            "nu": bundle.nu.at(t_o),
            "nu_prime": bundle.nu.slope_at(t_o),
            "mu_h3": [norms[3] for norms in out["mu_norms"]],
            "nu_h3": [norms[3] for norms in out["nu_norms"]],
        }
        starts = {"mu": bundle.mu.start, "nu": bundle.nu.start}

    report = ResidualReport(
        params=p,
        digits=bundle.digits,
        N=bundle.N,
        alpha=bundle.alpha,
        omega=bundle.omega,
        t_alpha=bundle.t_alpha,
        t_omega=bundle.t_omega,
        e1_start_h3=out["e1_start"],
        e1_end_h3=out["e1_end"],
        shoot_gap=shooting_gap(bundle.eta, bundle.zeta, p, bundle.alpha, bundle.omega, bundle.t_alpha, bundle.t_omega),
        stop_err_alpha=stop_error(bundle.eta, p, bundle.t_alpha),
        stop_err_omega=stop_error(bundle.zeta, q, bundle.t_omega),
        endpoints=endpoints,
        sobolev=sobolev,
        e2_start_h3=out.get("e2_start"),
        e2_end_h3=out.get("e2_end"),
        linearized=linearized,
        linearized_start=starts,
    )
    deltas = table_items(report, reference) if (p.d1, p.d2) == (2, 9) else []
    report = replace(report, table_deltas=deltas)
    logger.info(f"[VERIFY] epsilon achieved <= {decimal_up(report.epsilon_achieved, 3)}")
    return report


# =============================================================================
# Assumption checks
# =============================================================================

@dataclass(frozen=True)
class Verdict:
    name: str
    epsilon: Fraction
    items: List[CheckItem]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    @property
    def failed(self) -> List[CheckItem]:
        return [item for item in self.items if not item.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "items": [item.to_dict() for item in self.items],
        }


def _below(name: str, value: Optional[Ball], epsilon: Fraction) -> CheckItem:
    if value is None:
        return CheckItem(name, Fraction(0), epsilon, False)
    bound = to_fraction(value.mag())
    return CheckItem(name, bound, epsilon, bound < epsilon)


def table_items(report: ResidualReport, reference: ReferenceValues) -> List[CheckItem]:
    """Deltas against the published endpoint, norm and linearized tables."""
    items: List[CheckItem] = []
    items += reference.match("shooting", "alpha", [report.alpha])
    items += reference.match("shooting", "omega", [report.omega])
    items += reference.match("shooting", "t_alpha", [report.t_alpha])
    items += reference.match("shooting", "t_omega", [report.t_omega])
    for key, values in report.endpoints.items():
        items += reference.match("endpoints", key, values)
    for side, rows in report.sobolev.items():
        for i, norms in enumerate(rows):
            items += reference.upper("sobolev", f"{side}{i + 1}", norms)
    for key in ("mu", "mu_prime", "nu", "nu_prime"):
        if key in report.linearized:
            items += reference.match("linearized", key, report.linearized[key])
    for key in ("mu", "nu"):
        if f"{key}_h3" in report.linearized:
            items += reference.upper("linearized_h3", key, report.linearized[f"{key}_h3"])
    return items


def _table_group(items: Sequence[CheckItem], prefixes: Sequence[str]) -> List[CheckItem]:
    return [item for item in items if item.item.split(".")[0] in prefixes]


def check_assumption1(report: ResidualReport, epsilon, reference: Optional[ReferenceValues] = None) -> Verdict:
    """
    Passes iff both E1 residual norms, the shooting gap and both stopping
    errors are below epsilon and the heuristic values reproduce the tables.
    """
    epsilon = Fraction(epsilon) if not isinstance(epsilon, Fraction) else epsilon
    items = [
        _below("e1_start_h3", report.e1_start_h3, epsilon),
        _below("e1_end_h3", report.e1_end_h3, epsilon),
        _below("shoot_gap", report.shoot_gap, epsilon),
        _below("stop_err_alpha", report.stop_err_alpha, epsilon),
        _below("stop_err_omega", report.stop_err_omega, epsilon),
    ]
    deltas = report.table_deltas
    if not deltas and reference is not None:
        deltas = table_items(report, reference)
    items += _table_group(deltas, ("shooting", "endpoints", "sobolev"))
    verdict = Verdict("assumption1", epsilon, items)
    logger.info(f"[VERIFY] assumption 1 {'PASS' if verdict.passed else 'FAIL'} ({len(verdict.failed)} failed items)")
    return verdict


def check_assumption2(report: ResidualReport, epsilon, reference: Optional[ReferenceValues] = None) -> Verdict:
    """
    Passes iff both E2 residual norms are below epsilon, the linearized fits
    start at (0, 0, 0, 1, 0) and the linearized table values are reproduced.
    """
    epsilon = Fraction(epsilon) if not isinstance(epsilon, Fraction) else epsilon
    items = [
        _below("e2_start_h3", report.e2_start_h3, epsilon),
        _below("e2_end_h3", report.e2_end_h3, epsilon),
    ]
    expected = (0, 0, 0, 1, 0)
    for key in ("mu", "nu"):
        start = report.linearized_start.get(key)
        ok = start is not None and all(b.is_exact() and b.contains(v) for b, v in zip(start, expected))
        items.append(CheckItem(f"{key}_initial_condition", Fraction(0), Fraction(0), ok))
    deltas = report.table_deltas
    if not deltas and reference is not None:
        deltas = table_items(report, reference)
    items += _table_group(deltas, ("linearized", "linearized_h3"))
    verdict = Verdict("assumption2", epsilon, items)
    logger.info(f"[VERIFY] assumption 2 {'PASS' if verdict.passed else 'FAIL'} ({len(verdict.failed)} failed items)")
    return verdict


def linearization_items(lin: LinearizationResult, reference: Optional[ReferenceValues] = None) -> List[CheckItem]:
    """Stopping-time differentials, first-order expansions and shooting expansion versus the tables."""
    reference = reference or ReferenceValues()
    items = reference.match("stopping_differentials", "rho1", [lin.rho1])
    items += reference.match("stopping_differentials", "sigma1", [lin.sigma1])
    for key in ("eta0", "eta1", "zeta0", "zeta1"):
        items += reference.match("expansions", key, getattr(lin, key))
    for key in ("A0", "A1", "Omega0", "Omega1"):
        items += reference.match("shooting_expansion", key, getattr(lin, key))
    return items
