"""
Taylor Solver Module
Arbitrary-precision power-series propagation of eta' = (1/t) L eta + B(eta, eta).

A Frobenius recurrence starts the solution at the singular origin; away from
it, rho-normalized coefficients c_k = rho^k eta^(k)(t0) / k! are generated by
a recursion and each expansion is trusted on half its estimated radius.
No rigor is claimed here: accuracy is checked a posteriori by the
verification stage.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

from cohom1.errors import DomainError, PropagationError
from cohom1.numerics.precision import context, from_decimal, to_decimal, working_digits
from cohom1.solvers.system import DIM, Params, State5, apply_L, bilinear_B
from cohom1.utils.config import DEFAULT_RHO

logger = logging.getLogger(__name__)

# =============================================================================
# Constants
# =============================================================================

MIN_RADIUS = 1e-6
MAX_NORM = 100
RADIUS_WINDOW = 5
LOG2_10 = math.log2(10)


def term_count(d_target: int) -> int:
    """N = ceil((d + 2) log 10 / log 2) series terms per patch."""
    return int(math.ceil((int(d_target) + 2) * LOG2_10))


# =============================================================================
# Data model
# =============================================================================

@dataclass(frozen=True)
class TaylorPatch:
    """
    One rho-normalized expansion eta(center + delta) = sum c_k (delta / rho)^k.

    coeffs[k] is the State5 c_k; radius is the root-test estimate and the
    patch is used on [center, valid_to] with valid_to = center + radius / 2.
    join_error is the derivative mismatch against the previous patch at center.
    """

    center: Any
    rho: Any
    coeffs: Tuple[Tuple[Any, ...], ...]
    radius: float
    valid_to: Any
    join_error: float = 0.0

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class SolutionPath:
    """Chain of patches covering [0, t_end] for one choice of Params."""

    params: Params
    patches: Tuple[TaylorPatch, ...]
    d_target: int
    rho: Any
    digits: int = 0
    _centers: List[Any] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        if not self.patches:
            raise DomainError("A solution path needs at least one patch")
        self._centers.extend(patch.center for patch in self.patches)

    @property
    def t_end(self):
        return self.patches[-1].valid_to

    @property
    def ctx(self):
        return context(self.digits or working_digits(self.d_target))

    def locate(self, t) -> TaylorPatch:
        if t < 0 or t > self.t_end:
            raise DomainError(f"t = {t} outside covered interval [0, {self.t_end}]")
        index = bisect.bisect_right(self._centers, t) - 1
        return self.patches[max(index, 0)]


# =============================================================================
# Recurrences
# =============================================================================

def _series(p: Params, center, c0: Sequence, rho, n_terms: int, ctx) -> List[List[Any]]:
    """
    Component lists x[i][k] of the normalized coefficients c_0..c_n.

    Quadratic terms are formed from scalar convolutions; components 4 and 5
    are constant in t, so they only contribute at order zero.
    """
    d1, d2 = p.d1, p.d2
    zero = ctx.zero
    x1 = [ctx.convert(c0[0])] + [zero] * n_terms
    x2 = [ctx.convert(c0[1])] + [zero] * n_terms
    x3 = [ctx.convert(c0[2])] + [zero] * n_terms
    x4 = ctx.convert(c0[3])
    x5 = ctx.convert(c0[4])
    s = [x1[0] + x4] + [zero] * n_terms
    x5_sq = x5 * x5
    inv_sum = ctx.mpf(d1 + d2) / (d1 * d2)
    origin = center == 0
    if not origin:
        q = -rho / center
        acc2 = acc3 = zero

    for m in range(n_terms):
        fdot = ctx.fdot
        c23 = fdot(x2[: m + 1], x3[m::-1])
        q1 = -fdot(x2[: m + 1], s[m::-1]) / d1
        q2 = -c23 + d1 * fdot(s[: m + 1], s[m::-1])
        q3 = (2 * c23 - fdot(x3[: m + 1], x3[m::-1])) / d2 - inv_sum * fdot(x2[: m + 1], x2[m::-1])
        if m == 0:
            q2 -= d1 * x5_sq
            q3 -= x5_sq
        k = m + 1
        if origin:
            # c_{k} = rho (kI - L)^{-1} Q_{k-1}
            a = q2 / (k + d2)
            x1[k] = rho * q1 / k
            x2[k] = rho * a
            x3[k] = rho * (q3 + 2 * a) / (k + 2)
        else:
            acc2 = x2[m] + q * acc2
            acc3 = x3[m] + q * acc3
            f = rho / k
            x1[k] = f * q1
            x2[k] = f * (-d2 * acc2 / center + q2)
            x3[k] = f * ((2 * acc2 - 2 * acc3) / center + q3)
        s[k] = x1[k]
    return [x1, x2, x3, [x4] + [zero] * n_terms, [x5] + [zero] * n_terms]


def normalized_recursion(p: Params, center, coeffs: Sequence[Sequence], rho, digits: int = 30) -> State5:
    """
    Next normalized coefficient c_{m+1} from c_0..c_m at center t > 0:

        c_{m+1} = rho / (m+1) * [L S_m / t + sum_i B(c_i, c_{m-i})],
        S_m = c_m - (rho / t) S_{m-1}.
    """
    if center <= 0:
        raise DomainError("normalized_recursion needs center > 0; use frobenius_origin")
    ctx = context(digits)
    center, rho = ctx.convert(center), ctx.convert(rho)
    coeffs = [[ctx.convert(v) for v in row] for row in coeffs]
    m = len(coeffs) - 1
    acc = [ctx.zero] * DIM
    for j in range(m + 1):
        acc = [ctx.convert(coeffs[j][i]) - rho / center * acc[i] for i in range(DIM)]
    quad = [ctx.zero] * DIM
    for i in range(m + 1):
        term = bilinear_B(p, coeffs[i], coeffs[m - i])
        quad = [quad[c] + term[c] for c in range(DIM)]
    lin = apply_L(p, acc)
    return [rho / (m + 1) * (lin[c] / center + quad[c]) for c in range(DIM)]


def derivative_recursion(p: Params, t, jet: Sequence[Sequence], digits: int = 30) -> State5:
    """
    eta^(m+1)(t) from the jet eta, eta', ..., eta^(m) at t > 0, by differentiating
    the ODE m times:

        eta^(m+1) = sum_k C(m,k) [(-1)^(m-k) (m-k)! L eta^(k) / t^(m-k+1) + B(eta^(m-k), eta^(k))]
    """
    if t == 0:
        raise DomainError("derivative_recursion is singular at t = 0")
    ctx = context(digits)
    t = ctx.convert(t)
    jet = [[ctx.convert(v) for v in row] for row in jet]
    m = len(jet) - 1
    out = [ctx.zero] * DIM
    for k in range(m + 1):
        binom = math.comb(m, k)
        lin = apply_L(p, jet[k])
        weight = (-1) ** (m - k) * math.factorial(m - k) / t ** (m - k + 1)
        quad = bilinear_B(p, jet[m - k], jet[k])
        out = [out[c] + binom * (weight * lin[c] + quad[c]) for c in range(DIM)]
    return out


# =============================================================================
# Radius and patches
# =============================================================================

def estimate_radius(patch_or_coeffs, rho=None) -> float:
    """
    Root-test radius 1 / max_k (|c_k|_inf / rho^k)^(1/k) over the last five
    coefficients. Returns math.inf when they all vanish.
    """
    if isinstance(patch_or_coeffs, TaylorPatch):
        coeffs, rho = patch_or_coeffs.coeffs, patch_or_coeffs.rho
    else:
        coeffs = patch_or_coeffs
    if len(coeffs) < RADIUS_WINDOW + 1:
        raise DomainError(f"Radius estimation needs at least {RADIUS_WINDOW + 1} coefficients")
    low = context(15)
    log_rho = float(low.log(low.convert(rho)))
    worst = None
    n = len(coeffs)
    for k in range(n - RADIUS_WINDOW, n):
        norm = max(abs(v) for v in coeffs[k])
        if norm == 0:
            continue
        rate = (float(low.log(low.convert(norm))) - k * log_rho) / k
        worst = rate if worst is None else max(worst, rate)
    if worst is None:
        return math.inf
    return math.exp(-worst)


def _build_patch(p: Params, center, c0, rho, n_terms, ctx, join_error=0.0, t_cap=None) -> TaylorPatch:
    comps = _series(p, center, c0, rho, n_terms, ctx)
    coeffs = tuple(tuple(comps[i][k] for i in range(DIM)) for k in range(n_terms + 1))
    radius = estimate_radius(coeffs, rho)
    if radius < MIN_RADIUS:
        raise PropagationError(
            f"Estimated radius {radius:.3e} collapsed at t = {float(center):.6f}", reach=center
        )
    if math.isinf(radius):
        valid_to = ctx.convert(t_cap) if t_cap is not None else center + 1
    else:
        # short binary steps keep centers exactly representable in dumps
        valid_to = center + ctx.mpf(radius / 2)
    return TaylorPatch(center, rho, coeffs, radius, valid_to, join_error)


def frobenius_origin(p: Params, N: int, rho, digits: int = 30) -> TaylorPatch:
    """Origin patch: c_{k+1} = rho (kI + I - L)^{-1} sum_i B(c_i, c_{k-i}), c_0 = eta(0)."""
    if N < 2:
        raise DomainError("frobenius_origin needs N >= 2")
    ctx = context(digits)
    rho = ctx.convert(rho)
    if rho <= 0:
        raise DomainError("rho must be positive")
    c0 = [ctx.zero, ctx.zero, ctx.zero, ctx.convert(p.alpha), ctx.sqrt(p.lam)]
    return _build_patch(p, ctx.zero, c0, rho, N, ctx)


def _check_norm(values: Sequence, t) -> None:
    """
    Blow-up test on the three evolving components.

    Components 4 and 5 hold the constants alpha and sqrt(lambda), which the
    recursion never changes, so they cannot grow along the path.
    """
    norm = max(abs(v) for v in values[:3])
    if norm > MAX_NORM:
        raise PropagationError(f"|eta|_inf = {float(norm):.3f} exceeds {MAX_NORM} at t = {float(t):.6f}", reach=t)


def _next_patch(path_params: Params, last: TaylorPatch, rho, n_terms, ctx, t_cap) -> TaylorPatch:
    center = last.valid_to
    c0 = evaluate_patch(last, center, 0)
    _check_norm(c0, center)
    left = evaluate_patch(last, center, 1)
    local_rho = min(rho, center / 2)
    patch = _build_patch(path_params, center, c0, local_rho, n_terms, ctx, t_cap=t_cap)
    right = [patch.coeffs[1][i] / local_rho for i in range(DIM)]
    join = float(max(abs(left[i] - right[i]) for i in range(3)))
    return TaylorPatch(patch.center, patch.rho, patch.coeffs, patch.radius, patch.valid_to, join)


def propagate(p: Params, alpha, t_end, d_target: int, rho=None) -> SolutionPath:
    """
    Chain patches from the origin until t_end is covered.

    Each patch keeps N = term_count(d_target) terms. Centers below rho use
    rho = center / 2 so the accumulator recursion stays contracting.

    Raises:
        PropagationError: radius collapse or |eta|_inf > 100
    """
    ctx = context(working_digits(d_target))
    rho = ctx.convert(rho if rho is not None else DEFAULT_RHO)
    t_end = ctx.convert(t_end)
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    p = p.with_alpha(ctx.convert(alpha))
    n_terms = term_count(d_target)
    first = frobenius_origin(p, n_terms, rho, working_digits(d_target))
    path = SolutionPath(p, (first,), int(d_target), rho, working_digits(d_target))
    return extend(path, t_end)


def extend(path: SolutionPath, t_end) -> SolutionPath:
    """New path continuing `path` until t_end is covered (the input is unchanged)."""
    ctx = path.ctx
    t_end = ctx.convert(t_end)
    patches = list(path.patches)
    n_terms = term_count(path.d_target)
    while patches[-1].valid_to < t_end:
        patches.append(_next_patch(path.params, patches[-1], path.rho, n_terms, ctx, t_end))
        logger.debug(
            f"[TAYLOR] patch {len(patches)} center={float(patches[-1].center):.6f} "
            f"radius={patches[-1].radius:.4f} join={patches[-1].join_error:.2e}"
        )
    tail = 2.0 ** (-n_terms) * MAX_NORM
    logger.debug(f"[TAYLOR] covered [0, {float(patches[-1].valid_to):.6f}] with {len(patches)} patches, tail~{tail:.1e}")
    return SolutionPath(path.params, tuple(patches), path.d_target, path.rho, path.digits)


# =============================================================================
# Evaluation
# =============================================================================

def evaluate_patch(patch: TaylorPatch, t, order: int = 0) -> State5:
    ctx_delta = (t - patch.center) / patch.rho
    coeffs = patch.coeffs
    n = len(coeffs) - 1
    out = []
    for i in range(DIM):
        if order == 0:
            acc = coeffs[n][i]
            for k in range(n - 1, -1, -1):
                acc = acc * ctx_delta + coeffs[k][i]
        else:
            acc = n * coeffs[n][i]
            for k in range(n - 1, 0, -1):
                acc = acc * ctx_delta + k * coeffs[k][i]
            acc = acc / patch.rho
        out.append(acc)
    return out


def evaluate(path: SolutionPath, t, order: int = 0) -> State5:
    """Value (order 0) or derivative (order 1) of the chained series at t."""
    if order not in (0, 1):
        raise DomainError(f"order must be 0 or 1, got {order}")
    t = path.ctx.convert(t)
    return evaluate_patch(path.locate(t), t, order)


def _patch_integral(patch: TaylorPatch, t) -> State5:
    """integral of the patch series from center to t."""
    s = (t - patch.center) / patch.rho
    n = len(patch.coeffs) - 1
    out = []
    for i in range(DIM):
        acc = patch.coeffs[n][i] / (n + 1)
        for k in range(n - 1, -1, -1):
            acc = acc * s + patch.coeffs[k][i] / (k + 1)
        out.append(acc * s * patch.rho)
    return out


def path_integral(path: SolutionPath, t) -> State5:
    """integral_0^t eta(s) ds by termwise integration of the patches."""
    t = path.ctx.convert(t)
    target = path.locate(t)
    total = [path.ctx.zero] * DIM
    for patch in path.patches:
        if patch is target:
            break
        piece = _patch_integral(patch, patch.valid_to)
        total = [total[i] + piece[i] for i in range(DIM)]
    piece = _patch_integral(target, t)
    return [total[i] + piece[i] for i in range(DIM)]


def path_w(path: SolutionPath, t):
    """W(t) = sqrt(d2 - 1) / (t exp(integral_0^t (eta3 - eta2) / d2))."""
    ctx = path.ctx
    t = ctx.convert(t)
    if t <= 0:
        raise DomainError("path_w needs t > 0")
    p = path.params
    integral = path_integral(path, t)
    return ctx.sqrt(p.d2 - 1) / (t * ctx.exp((integral[2] - integral[1]) / p.d2))


# =============================================================================
# Serialization
# =============================================================================

def dump_patches(path: SolutionPath) -> List[Dict[str, Any]]:
    """One JSON-ready record per patch with decimal strings at working precision."""
    digits = path.digits
    records = []
    for patch in path.patches:
        records.append({
            "center": to_decimal(patch.center, digits),
            "rho": to_decimal(patch.rho, digits),
            "radius": repr(patch.radius),
            "valid_to": to_decimal(patch.valid_to, digits),
            "coeffs": [[to_decimal(v, digits) for v in c] for c in patch.coeffs],
        })
    return records


def load_patches(records: Sequence[Dict[str, Any]], params: Params, d_target: int) -> SolutionPath:
    """Rebuild a SolutionPath from dump_patches records."""
    digits = working_digits(d_target)
    ctx = context(digits)
    patches = []
    for rec in records:
        patches.append(TaylorPatch(
            center=ctx.convert(from_decimal(rec["center"], digits)),
            rho=ctx.convert(from_decimal(rec["rho"], digits)),
            coeffs=tuple(tuple(ctx.convert(from_decimal(v, digits)) for v in c) for c in rec["coeffs"]),
            radius=float(rec["radius"]),
            valid_to=ctx.convert(from_decimal(rec["valid_to"], digits)),
        ))
    if not patches:
        raise DomainError("No patches in coefficient dump")
    alpha = patches[0].coeffs[0][3]
    return SolutionPath(params.with_alpha(alpha), tuple(patches), int(d_target), patches[0].rho, digits)
