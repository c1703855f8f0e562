"""
Shooting Module
Stopping times, the shooting maps A(alpha) and Omega(omega), the 2-D
Broyden solve of A(alpha) = Omega(omega), and finite-difference
linearization of the shots.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cohom1.errors import (
    Cohom1Error,
    ConvergenceError,
    DomainError,
    PrecisionError,
    StoppingNotReached,
)
from cohom1.numerics.precision import context, solve_digits, working_digits
from cohom1.solvers.system import Params
from cohom1.solvers.taylor import SolutionPath, evaluate, extend, propagate
from cohom1.utils.config import THREADS

logger = logging.getLogger(__name__)

# =============================================================================
# Constants
# =============================================================================

GRID_START = "0.5"
GRID_STEP = "0.05"
EXTEND_STEP = "0.25"
MAX_REACH = 6
NEWTON_SWITCH = 1e-4
STOP_MARGIN = "0.001"
ROUND_SEED_GAP = 0.1
MAX_BROYDEN = 60


# =============================================================================
# Results
# =============================================================================

@dataclass(frozen=True)
class ShotResult:
    """
    One shot from a singular orbit.

    value is A(alpha) = (W, eta2) for the forward system or
    Omega(omega) = (omega + zeta1, zeta2) for the mirrored one.
    """

    params: Params
    parameter: Any
    t_stop: Any
    endpoint: Tuple[Any, ...]
    endpoint_derivative: Tuple[Any, ...]
    value: Tuple[Any, Any]
    mirrored: bool = False
    path: Optional[SolutionPath] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LinearizationResult:
    """Central-difference derivatives of both shots with respect to their parameters."""

    delta: Any
    digits: int
    mu_ic_end: Tuple[Any, ...]
    mu_ic_end_derivative: Tuple[Any, ...]
    nu_ic_end: Tuple[Any, ...]
    nu_ic_end_derivative: Tuple[Any, ...]
    rho1: Any
    sigma1: Any
    rho1_check: Any
    sigma1_check: Any
    A0: Tuple[Any, Any]
    Omega0: Tuple[Any, Any]
    A1: Tuple[Any, Any]
    Omega1: Tuple[Any, Any]
    J: Tuple[Tuple[Any, Any], Tuple[Any, Any]]
    eta0: Tuple[Any, ...]
    eta1: Tuple[Any, ...]
    zeta0: Tuple[Any, ...]
    zeta1: Tuple[Any, ...]
    shots: Dict[str, ShotResult] = field(default_factory=dict, compare=False, repr=False)


# =============================================================================
# Stopping time
# =============================================================================

def _z(path: SolutionPath, t):
    return path.params.d2 / t + evaluate(path, t)[2]


def _z_prime(path: SolutionPath, t):
    return -path.params.d2 / (t * t) + evaluate(path, t, 1)[2]


def _brent(f, a, b, fa, fb, xtol, ctx, maxiter: int = 200):
    """Bracketing root search (Brent 1973); returns a bracket (lo, hi) narrower than xtol."""
    if fa * fb > 0:
        raise DomainError("Brent needs a sign change")
    c, fc = a, fa
    d = e = b - a
    for _ in range(maxiter):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2 * ctx.eps * abs(b) + xtol / 2
        m = (c - b) / 2
        if abs(m) <= tol or fb == 0:
            return (b, c) if b < c else (c, b)
        if abs(e) >= tol and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2 * m * s
                q = 1 - s
            else:
                q, r = fa / fc, fb / fc
                p = s * (2 * m * q * (q - r) - (b - a) * (r - 1))
                q = (q - 1) * (r - 1) * (s - 1)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2 * p < min(3 * m * q - abs(tol * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = m
        else:
            d = e = m
        a, fa = b, fb
        b = b + d if abs(d) > tol else b + (tol if m > 0 else -tol)
        fb = f(b)
    raise ConvergenceError("Brent bracket search did not converge")


def _bracket(path: SolutionPath, ctx):
    """Grid search for a sign change of Z, halving towards 0 when Z(0.5) < 0."""
    t = ctx.mpf(GRID_START)
    z = _z(path, t)
    if z < 0:
        hi, z_hi = t, z
        lo = t / 2
        z_lo = _z(path, lo)
        while z_lo < 0:
            hi, z_hi = lo, z_lo
            lo = lo / 2
            z_lo = _z(path, lo)
        return lo, hi, z_lo, z_hi
    step = ctx.mpf(GRID_STEP)
    while t + step <= path.t_end:
        nxt = t + step
        z_next = _z(path, nxt)
        if z_next <= 0:
            return t, nxt, z, z_next
        t, z = nxt, z_next
    raise StoppingNotReached(f"No sign change of Z up to t = {float(path.t_end):.4f}", reach=path.t_end)


def stopping_time(path: SolutionPath):
    """
    Unique t with Z(t) = d2/t + eta3(t) = 0 inside the path's coverage.

    Brent narrows the grid bracket to 1e-4, then Newton on Z finishes
    using eta3' from the series.

    Raises:
        StoppingNotReached: no sign change inside the path
        ConvergenceError: Newton failed to reach |Z| <= 10^-d
    """
    ctx = path.ctx
    lo, hi, z_lo, z_hi = _bracket(path, ctx)
    if z_hi == 0:
        return hi
    lo, hi = _brent(lambda t: _z(path, t), lo, hi, z_lo, z_hi, ctx.mpf(NEWTON_SWITCH), ctx)
    tol = ctx.mpf(10) ** (-path.d_target)
    t = (lo + hi) / 2
    for _ in range(100):
        z = _z(path, t)
        if abs(z) <= tol:
            return t
        t_new = t - z / _z_prime(path, t)
        if not lo <= t_new <= hi:
            t_new = (lo + hi) / 2
        if z > 0:
            lo = t
        else:
            hi = t
        t = t_new
    raise ConvergenceError(f"Stopping time did not converge; |Z| = {float(abs(_z(path, t))):.3e}")


# =============================================================================
# Shooting maps
# =============================================================================

def shoot(p: Params, parameter, d_target: int, rho=None, mirrored: bool = False) -> ShotResult:
    """
    Propagate from the origin, find the stopping time and evaluate the shooting map.

    For mirrored=False the value is A = (W, eta2) with W from the conserved
    quantity; for mirrored=True it is Omega = (omega + zeta1, zeta2).
    """
    ctx = context(working_digits(d_target))
    parameter = ctx.convert(parameter)
    if parameter <= 0:
        raise DomainError(f"Shooting parameter must be positive, got {parameter}")
    path = propagate(p, parameter, ctx.mpf(GRID_START), d_target, rho)
    while True:
        try:
            t_stop = stopping_time(path)
            break
        except StoppingNotReached:
            if path.t_end > MAX_REACH:
                raise
            path = extend(path, path.t_end + ctx.mpf(EXTEND_STEP))
    path = extend(path, t_stop + ctx.mpf(STOP_MARGIN))
    end = evaluate(path, t_stop)
    end_d = evaluate(path, t_stop, 1)
    q = path.params
    x, y = parameter + end[0], end[1]
    if mirrored:
        value = (x, y)
    else:
        arg = (
            (q.d1 + q.d2 - 1) * q.lam - q.d1 * x * x - (ctx.mpf(1) / q.d1 + ctx.mpf(1) / q.d2) * y * y
        ) / q.d2
        if arg <= 0:
            raise DomainError(f"W^2 = {float(arg):.3e} is not positive at the stopping time")
        value = (ctx.sqrt(arg), y)
    logger.debug(
        f"[SHOOT] ({q.d1},{q.d2}) param={float(parameter):.10f} t_stop={float(t_stop):.10f} "
        f"value=({float(value[0]):.8f}, {float(value[1]):.8f})"
    )
    return ShotResult(q, parameter, t_stop, tuple(end), tuple(end_d), value, mirrored, path)


def shoot_A(p: Params, alpha, d_target: int, rho=None) -> ShotResult:
    """A(alpha) for the (d1, d2) system."""
    return shoot(p, alpha, d_target, rho, mirrored=False)


def shoot_Omega(p: Params, omega, d_target: int, rho=None) -> ShotResult:
    """Omega(omega) for the mirrored (d2, d1) system; pass the forward Params."""
    return shoot(p.mirrored(omega), omega, d_target, rho, mirrored=True)


def shooting_gap(shot_a: ShotResult, shot_o: ShotResult):
    """|A(alpha) - Omega(omega)| in the Euclidean norm."""
    ctx = shot_a.path.ctx if shot_a.path else context(30)
    return ctx.sqrt(sum((shot_a.value[i] - shot_o.value[i]) ** 2 for i in range(2)))


# =============================================================================
# Broyden
# =============================================================================

def broyden_solve(
    seed_alpha,
    seed_omega,
    d_target: int,
    p: Optional[Params] = None,
    rho=None,
    max_iter: int = MAX_BROYDEN,
) -> Tuple[Any, Any, ShotResult, ShotResult]:
    """
    Solve G(alpha, omega) = A(alpha) - Omega(omega) = 0 with Broyden's method.

    The initial Jacobian is a forward difference at the seed. Converging to
    the round pair from non-round seeds is treated as a failure.

    Returns:
        Tuple of (alpha*, omega*, shot A at alpha*, shot Omega at omega*)

    Raises:
        ConvergenceError: divergence, iteration cap, or round pair from non-round seeds
    """
    p = p or Params(2, 9)
    ctx = context(working_digits(d_target))
    tol = ctx.mpf(10) ** (-d_target + 5)
    x = [ctx.convert(seed_alpha), ctx.convert(seed_omega)]
    trace: List[Tuple[float, float, float]] = []

    def evaluate_g(a, w):
        try:
            sa = shoot_A(p, a, d_target, rho)
            so = shoot_Omega(p, w, d_target, rho)
        except Cohom1Error as exc:
            raise ConvergenceError(f"Shot failed at ({float(a)}, {float(w)}): {exc}", trace) from exc
        return [sa.value[0] - so.value[0], sa.value[1] - so.value[1]], sa, so

    g, shot_a, shot_o = evaluate_g(*x)
    h = ctx.mpf(10) ** (-(working_digits(d_target) // 2))
    ga, _, _ = evaluate_g(x[0] + h, x[1])
    gw, _, _ = evaluate_g(x[0], x[1] + h)
    jac = ctx.matrix([
        [(ga[0] - g[0]) / h, (gw[0] - g[0]) / h],
        [(ga[1] - g[1]) / h, (gw[1] - g[1]) / h],
    ])
    first = ctx.norm(ctx.matrix(g))

    for iteration in range(1, max_iter + 1):
        norm = ctx.norm(ctx.matrix(g))
        digits = -float(ctx.log10(norm)) if norm > 0 else float("inf")
        trace.append((float(x[0]), float(x[1]), float(norm)))
        logger.info(f"[BROYDEN] iter={iteration} |G|~1e-{digits:.1f} alpha={float(x[0]):.10f} omega={float(x[1]):.10f}")
        if norm <= tol:
            break
        if norm > 1e3 * max(first, 1):
            raise ConvergenceError(f"Broyden diverged: |G| = {float(norm):.3e}", trace)
        try:
            step = ctx.lu_solve(jac, ctx.matrix([-g[0], -g[1]]))
        except ZeroDivisionError as exc:
            raise ConvergenceError("Broyden Jacobian became singular", trace) from exc
        x_new = [x[0] + step[0], x[1] + step[1]]
        g_new, shot_a, shot_o = evaluate_g(*x_new)
        dg = ctx.matrix([g_new[0] - g[0], g_new[1] - g[1]])
        dx = ctx.matrix([step[0], step[1]])
        denom = (dx.T * dx)[0]
        if denom == 0:
            x, g = x_new, g_new
            continue
        jac = jac + ((dg - jac * dx) * dx.T) / denom
        x, g = x_new, g_new
    else:
        raise ConvergenceError(f"Broyden did not converge in {max_iter} iterations", trace)

    round_pair = (math.sqrt(p.d1 - 1), math.sqrt(p.d2 - 1))
    seeded_round = abs(float(seed_alpha) - round_pair[0]) < ROUND_SEED_GAP
    landed_round = abs(float(x[0]) - round_pair[0]) < 1e-6 and abs(float(x[1]) - round_pair[1]) < 1e-6
    if landed_round and not seeded_round:
        raise ConvergenceError("Converged to the round pair from non-round seeds", trace)
    return x[0], x[1], shot_a, shot_o


# =============================================================================
# Linearization
# =============================================================================

def _difference(plus, minus, delta, ctx, name: str):
    diff = plus - minus
    scale = max(abs(plus), abs(minus))
    if diff != 0 and abs(diff) < 10 * ctx.eps * scale:
        raise PrecisionError(f"Loss of significance in {name}; increase digits")
    return diff / (2 * delta)


def fd_delta(digits: int):
    return context(working_digits(digits)).mpf(10) ** (-(digits // 3))


def fd_linearize(
    alpha_hat,
    omega_hat,
    d_target: int,
    p: Optional[Params] = None,
    rho=None,
    delta=None,
) -> LinearizationResult:
    """
    Central differences of both shots with step delta = 10^-floor(d/3).

    Solves at d = ceil(1.5 d_target). Returns the linearized endpoint data
    mu_IC(t_alpha), nu_IC(t_omega), the stopping-time derivatives, the
    shooting-map derivatives and J = (A1 | -Omega1).
    """
    p = p or Params(2, 9)
    digits = solve_digits(d_target, linearize=True)
    ctx = context(working_digits(digits))
    alpha_hat, omega_hat = ctx.convert(alpha_hat), ctx.convert(omega_hat)
    delta = ctx.convert(delta) if delta is not None else fd_delta(digits)

    jobs = {
        "alpha": (shoot_A, alpha_hat),
        "alpha_plus": (shoot_A, alpha_hat + delta),
        "alpha_minus": (shoot_A, alpha_hat - delta),
        "omega": (shoot_Omega, omega_hat),
        "omega_plus": (shoot_Omega, omega_hat + delta),
        "omega_minus": (shoot_Omega, omega_hat - delta),
    }
    with ThreadPoolExecutor(max_workers=THREADS) as pool:
        futures = {key: pool.submit(fn, p, value, digits, rho) for key, (fn, value) in jobs.items()}
        shots = {key: fut.result() for key, fut in futures.items()}
    logger.info(f"[SHOOT] linearization shots done at d={digits}, delta=1e-{digits // 3}")

    def side(center: ShotResult, plus: ShotResult, minus: ShotResult, name: str):
        t_hat = center.t_stop
        q = center.params
        up, down = evaluate(plus.path, t_hat), evaluate(minus.path, t_hat)
        up_d, down_d = evaluate(plus.path, t_hat, 1), evaluate(minus.path, t_hat, 1)
        mu = tuple((up[i] - down[i]) / (2 * delta) for i in range(5))
        mu_d = tuple((up_d[i] - down_d[i]) / (2 * delta) for i in range(5))
        t1 = _difference(plus.t_stop, minus.t_stop, delta, ctx, f"{name} stopping time")
        check = -mu[2] / (center.endpoint_derivative[2] - q.d2 / (t_hat * t_hat))
        v1 = tuple(_difference(plus.value[i], minus.value[i], delta, ctx, f"{name} shooting map") for i in range(2))
        lin0 = tuple(center.endpoint[:3])
        lin1 = tuple(mu[i] + center.endpoint_derivative[i] * t1 for i in range(3))
        return mu, mu_d, t1, check, v1, lin0, lin1

    mu, mu_d, rho1, rho_check, a1, eta0, eta1 = side(shots["alpha"], shots["alpha_plus"], shots["alpha_minus"], "alpha")
    nu, nu_d, sigma1, sigma_check, o1, zeta0, zeta1 = side(shots["omega"], shots["omega_plus"], shots["omega_minus"], "omega")
    jac = ((a1[0], -o1[0]), (a1[1], -o1[1]))
    logger.info(
        f"[SHOOT] rho1={float(rho1):.8f} (check {float(rho_check):.8f}) "
        f"sigma1={float(sigma1):.8f} (check {float(sigma_check):.8f})"
    )
    return LinearizationResult(
        delta=delta,
        digits=digits,
        mu_ic_end=mu,
        mu_ic_end_derivative=mu_d,
        nu_ic_end=nu,
        nu_ic_end_derivative=nu_d,
        rho1=rho1,
        sigma1=sigma1,
        rho1_check=rho_check,
        sigma1_check=sigma_check,
        A0=shots["alpha"].value,
        Omega0=shots["omega"].value,
        A1=a1,
        Omega1=o1,
        J=jac,
        eta0=eta0,
        eta1=eta1,
        zeta0=zeta0,
        zeta1=zeta1,
        shots=shots,
    )


# =============================================================================
# Curves
# =============================================================================

def sample_curve(p: Params, parameters: Sequence, d_target: int, rho=None, mirrored: bool = False) -> List[Dict[str, Any]]:
    """
    Sample A (or Omega when mirrored) over a parameter list.

    Failed points are kept with None values so the caller can write empty cells.
    """
    rows = []
    for value in parameters:
        try:
            shot = shoot_Omega(p, value, d_target, rho) if mirrored else shoot_A(p, value, d_target, rho)
            rows.append({
                "param": float(value),
                "v1": float(shot.value[0]),
                "v2": float(shot.value[1]),
                "t_stop": float(shot.t_stop),
            })
        except Cohom1Error as exc:
            logger.warning(f"[SHOOT] curve point {float(value):.6f} failed: {exc}")
            rows.append({"param": float(value), "v1": None, "v2": None, "t_stop": None})
    return rows


def _as_array(curve: Sequence[Dict[str, Any]]) -> np.ndarray:
    return np.array(
        [[row["param"], np.nan if row["v1"] is None else row["v1"], np.nan if row["v2"] is None else row["v2"]] for row in curve],
        dtype=float,
    )


def find_crossings(curve_a: Sequence[Dict[str, Any]], curve_b: Sequence[Dict[str, Any]]) -> List[Dict[str, float]]:
    """
    Intersections of the planar polylines traced by two sampled curves.

    Returns:
        List of dicts with the interpolated parameters (alpha, omega) and the
        crossing point (x, y), usable as Broyden seeds
    """
    a, b = _as_array(curve_a), _as_array(curve_b)
    if len(a) < 2 or len(b) < 2:
        return []
    p0, r = a[:-1, 1:], np.diff(a[:, 1:], axis=0)
    q0, s = b[:-1, 1:], np.diff(b[:, 1:], axis=0)
    # broadcast every segment of a against every segment of b
    qp = q0[None, :, :] - p0[:, None, :]
    denom = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (qp[..., 0] * s[None, :, 1] - qp[..., 1] * s[None, :, 0]) / denom
        tb = (qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]) / denom
        hit = (denom != 0) & (ta >= 0) & (ta < 1) & (tb >= 0) & (tb < 1)
    crossings = []
    for i, j in zip(*np.nonzero(hit)):
        point = p0[i] + ta[i, j] * r[i]
        crossings.append({
            "alpha": float(a[i, 0] + ta[i, j] * (a[i + 1, 0] - a[i, 0])),
            "omega": float(b[j, 0] + tb[i, j] * (b[j + 1, 0] - b[j, 0])),
            "x": float(point[0]),
            "y": float(point[1]),
        })
    crossings.sort(key=lambda c: c["alpha"])
    return crossings
