"""
Report Formatters Module
Formats stage results as the human-readable report.txt.
"""

from typing import Any, Dict, List, Optional, Sequence

from cohom1.numerics.precision import decimal_up
from cohom1.proof.certify import Certificate
from cohom1.proof.reference import CheckItem
from cohom1.proof.verify import NORM_NAMES, ResidualReport, Verdict
from cohom1.solvers.shooting import LinearizationResult, ShotResult

STATUS = {True: "[PASS]", False: "[FAIL]"}


def _num(x: Any, places: int = 10) -> str:
    return f"{float(x):.{places}f}"


def _vec(values: Sequence[Any], places: int = 6) -> str:
    return "(" + ", ".join(_num(v, places) for v in values) + ")"


def _items(items: Sequence[CheckItem], limit: Optional[int] = None) -> List[str]:
    lines = []
    shown = items if limit is None else items[:limit]
    for item in shown:
        lines.append(
            f"  {STATUS[item.passed]} {item.item}: {decimal_up(item.bound, 3)} "
            f"(threshold {decimal_up(item.threshold, 3)})"
        )
    if limit is not None and len(items) > limit:
        lines.append(f"  ... and {len(items) - limit} more items")
    return lines


def format_shot(shot_a: ShotResult, shot_o: ShotResult, deltas: Sequence[CheckItem] = ()) -> str:
    """
    Format a solved (or single) shooting pair.

    Args:
        shot_a: shot of A at alpha
        shot_o: shot of Omega at omega
        deltas: optional comparisons with the published heuristic values

    Returns:
        Formatted report section
    """
    p = shot_a.params
    message_parts = [f"Shooting ({p.d1}, {p.d2}), n = {p.dimension}"]
    message_parts.append(
        f"  alpha   = {_num(shot_a.parameter)}   t_alpha = {_num(shot_a.t_stop)}\n"
        f"  omega   = {_num(shot_o.parameter)}   t_omega = {_num(shot_o.t_stop)}\n"
        f"  A       = {_vec(shot_a.value, 8)}\n"
        f"  Omega   = {_vec(shot_o.value, 8)}"
    )
    message_parts.append(f"  eta(t_alpha)   = {_vec(shot_a.endpoint[:3])}")
    message_parts.append(f"  zeta(t_omega)  = {_vec(shot_o.endpoint[:3])}")
    if deltas:
        message_parts.append("\nReference values:")
        message_parts.extend(_items(deltas))
    return "\n".join(message_parts)


def format_linearization(lin: LinearizationResult, items: Sequence[CheckItem] = ()) -> str:
    message_parts = [f"Linearization (d = {lin.digits}, delta = {decimal_up(_abs(lin.delta), 1)})"]
    message_parts.append(
        f"  mu_IC(t_alpha)  = {_vec(lin.mu_ic_end[:3])}\n"
        f"  nu_IC(t_omega)  = {_vec(lin.nu_ic_end[:3])}\n"
        f"  rho1  = {_num(lin.rho1, 8)} (corollary {_num(lin.rho1_check, 8)})\n"
        f"  sigma1 = {_num(lin.sigma1, 8)} (corollary {_num(lin.sigma1_check, 8)})\n"
        f"  A1 = {_vec(lin.A1)}   Omega1 = {_vec(lin.Omega1)}"
    )
    if items:
        message_parts.append("\nReference values:")
        message_parts.extend(_items(items))
    return "\n".join(message_parts)


def _abs(x: Any) -> Any:
    return -x if x < 0 else x


def format_report(report: ResidualReport, verdicts: Sequence[Verdict]) -> str:
    """Residual bounds, Sobolev norms and the assumption verdicts."""
    message_parts = [f"Verification (digits = {report.digits}, N = {report.N})"]

    message_parts.append("\nResidual bounds:")
    for name, bound in report.bounds().items():
        message_parts.append(f"  {name}: <= {decimal_up(bound.mag(), 3)}")
    message_parts.append(f"  epsilon achieved: <= {decimal_up(report.epsilon_achieved, 3)}")

    message_parts.append("\nSobolev norms (" + ", ".join(NORM_NAMES) + "):")
    for side, rows in report.sobolev.items():
        for i, norms in enumerate(rows, 1):
            message_parts.append(f"  {side}{i}: " + ", ".join(f"{float(n.upper()):.2f}" for n in norms))

    for verdict in verdicts:
        message_parts.append(f"\n{STATUS[verdict.passed]} {verdict.name} at eps = {decimal_up(verdict.epsilon, 2)}")
        failed = verdict.failed
        if failed:
            message_parts.extend(_items(failed, limit=8))
    return "\n".join(message_parts)


def format_certificate(cert: Certificate) -> str:
    """C^k chain, Gronwall constant, thresholds and the existence verdict."""
    message_parts = [f"Certificate (eps = {decimal_up(cert.epsilon, 3)})"]

    message_parts.append("\nC^k bounds (C0, C1, C2):")
    for side, ck in cert.ck_bounds.items():
        message_parts.append(f"  {side}_hat: " + ", ".join(f"{float(v):.1f}" for v in ck.as_list()))
    for side, bound in cert.ic_c2_bound.items():
        message_parts.append(f"  {side}_IC C2: <= {float(bound):.1f}")
    message_parts.append(f"  error C2: <= {decimal_up(cert.error_c2, 3)}")

    g = cert.gronwall
    message_parts.append(
        "\nGronwall:\n"
        f"  integrals: {float(g.integral_eta.upper()):.2f} / {float(g.integral_zeta.upper()):.2f}\n"
        f"  M = e^{g.exponent} (tight e^{float(g.tight_log.upper()):.1f})\n"
        f"  |J^-1| <= {float(cert.jacobian_inv_norm.upper()):.1f}"
    )

    message_parts.append("\nThresholds (log10):")
    for t in cert.thresholds:
        message_parts.append(
            f"  {STATUS[t.passed]} {t.name}: {float(t.achieved_log10.upper()):.2f} vs {float(t.required_log10.mid):.2f}"
        )
    failed = [c for c in cert.checks if not c.passed]
    if failed:
        message_parts.append("\nFailed checks:")
        message_parts.extend(_items(failed))

    verdict = "PASS" if cert.final_verdict else "FAIL"
    message_parts.append(f"\nExistence verdict: {verdict}")
    return "\n".join(message_parts)


def format_crossings(crossings: Sequence[Dict[str, float]]) -> str:
    if not crossings:
        return "Curve crossings: none in the sampled window"
    message_parts = ["Curve crossings (alpha, omega):"]
    for c in crossings:
        message_parts.append(f"  ({c['alpha']:.6f}, {c['omega']:.6f}) at ({c['x']:.6f}, {c['y']:.6f})")
    return "\n".join(message_parts)
