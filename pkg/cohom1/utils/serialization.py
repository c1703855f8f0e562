"""
Serialization Module
Stage artifacts: decimal strings with precision headers, balls as [mid, rad]
pairs, JSON reports, JSON-lines coefficient streams and CSV curves.
"""

import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

from cohom1.errors import DomainError
from cohom1.numerics.chebyshev import ChebVec, series_from_dict, series_to_dict
from cohom1.numerics.precision import (
    Ball,
    ball_from_pair,
    ball_to_pair,
    bits_to_digits,
    context,
    decimal_up,
    digits_to_bits,
    from_decimal,
    to_decimal,
    working_digits,
)
from cohom1.proof.certify import Certificate
from cohom1.proof.reference import CheckItem
from cohom1.proof.verify import FitBundle, HatFunction, ResidualReport, Verdict
from cohom1.solvers.shooting import LinearizationResult, ShotResult
from cohom1.solvers.system import Params
from cohom1.solvers.taylor import dump_patches, load_patches
from cohom1.utils.digest import digest

logger = logging.getLogger(__name__)

DECIMAL_FORMAT = "<mantissa>e<exp>@<digits>"


# =============================================================================
# Files
# =============================================================================

def write_json(path: str, data: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"[CLI] wrote {path}")
    return path


def read_json(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise DomainError(f"Missing artifact: {path}")
    with open(path, "r") as f:
        return json.load(f)


def write_jsonl(path: str, records: Iterable[Dict[str, Any]]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            f.write("\n")
    logger.debug(f"[CLI] wrote {path}")
    return path


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    if not os.path.exists(path):
        raise DomainError(f"Missing artifact: {path}")
    with open(path, "r") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_csv(path: str, rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str]) -> str:
    """Rows as CSV; None values become empty cells."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row[k]) for k in fieldnames})
    logger.debug(f"[CLI] wrote {path} ({len(rows)} rows)")
    return path


def precision_header(digits: int) -> Dict[str, Any]:
    return {
        "digits": int(digits),
        "working_digits": working_digits(digits),
        "format": DECIMAL_FORMAT,
    }


def envelope(kind: str, digits: int, payload: Dict[str, Any], inputs: Dict[str, Any]) -> Dict[str, Any]:
    """Report wrapper carrying the precision header and the digest of the inputs."""
    return {
        "kind": kind,
        "precision": precision_header(digits),
        "digest": digest(inputs),
        "inputs": inputs,
        **payload,
    }


# =============================================================================
# Scalars and balls
# =============================================================================

def _decimals(values: Sequence[Any], digits: int) -> List[str]:
    return [to_decimal(v, digits) for v in values]


def _reals(texts: Sequence[str], ctx) -> List[Any]:
    return [ctx.convert(from_decimal(t, ctx.dps)) for t in texts]


def ball_pair(b: Ball) -> List[str]:
    return list(ball_to_pair(b, bits_to_digits(b.prec)))


def _pairs(balls: Optional[Sequence[Ball]]) -> Optional[List[List[str]]]:
    if balls is None:
        return None
    return [ball_pair(b) for b in balls]


def _params_dict(p: Params) -> Dict[str, int]:
    return {"d1": p.d1, "d2": p.d2}


# =============================================================================
# Shots and linearization
# =============================================================================

def shot_to_dict(shot: ShotResult) -> Dict[str, Any]:
    """Everything in a ShotResult except the path, which goes to a JSON-lines dump."""
    d_target = shot.path.d_target if shot.path is not None else 30
    digits = working_digits(d_target)
    return {
        "params": _params_dict(shot.params),
        "d_target": d_target,
        "mirrored": shot.mirrored,
        "parameter": to_decimal(shot.parameter, digits),
        "t_stop": to_decimal(shot.t_stop, digits),
        "endpoint": _decimals(shot.endpoint, digits),
        "endpoint_derivative": _decimals(shot.endpoint_derivative, digits),
        "value": _decimals(shot.value, digits),
    }


def shot_from_dict(data: Dict[str, Any], records: Optional[Sequence[Dict[str, Any]]] = None) -> ShotResult:
    """Rebuild a ShotResult; the path is restored when its patch records are given."""
    d_target = int(data["d_target"])
    ctx = context(working_digits(d_target))
    parameter = ctx.convert(from_decimal(data["parameter"], ctx.dps))
    p = Params(int(data["params"]["d1"]), int(data["params"]["d2"]), parameter)
    path = load_patches(records, p, d_target) if records else None
    return ShotResult(
        params=p,
        parameter=parameter,
        t_stop=ctx.convert(from_decimal(data["t_stop"], ctx.dps)),
        endpoint=tuple(_reals(data["endpoint"], ctx)),
        endpoint_derivative=tuple(_reals(data["endpoint_derivative"], ctx)),
        value=tuple(_reals(data["value"], ctx)),
        mirrored=bool(data["mirrored"]),
        path=path,
    )


def path_records(shot: ShotResult) -> List[Dict[str, Any]]:
    if shot.path is None:
        return []
    return dump_patches(shot.path)


_LIN_VECTORS = (
    "mu_ic_end", "mu_ic_end_derivative", "nu_ic_end", "nu_ic_end_derivative",
    "A0", "Omega0", "A1", "Omega1", "eta0", "eta1", "zeta0", "zeta1",
)
_LIN_SCALARS = ("delta", "rho1", "sigma1", "rho1_check", "sigma1_check")


def linearization_to_dict(lin: LinearizationResult) -> Dict[str, Any]:
    digits = working_digits(lin.digits)
    data: Dict[str, Any] = {"digits": lin.digits}
    for key in _LIN_SCALARS:
        data[key] = to_decimal(getattr(lin, key), digits)
    for key in _LIN_VECTORS:
        data[key] = _decimals(getattr(lin, key), digits)
    data["J"] = [_decimals(row, digits) for row in lin.J]
    return data


def linearization_from_dict(data: Dict[str, Any]) -> LinearizationResult:
    """LinearizationResult without its shots."""
    ctx = context(working_digits(int(data["digits"])))
    values: Dict[str, Any] = {"digits": int(data["digits"])}
    for key in _LIN_SCALARS:
        values[key] = ctx.convert(from_decimal(data[key], ctx.dps))
    for key in _LIN_VECTORS:
        values[key] = tuple(_reals(data[key], ctx))
    values["J"] = tuple(tuple(_reals(row, ctx)) for row in data["J"])
    return LinearizationResult(**values)


# =============================================================================
# Fits
# =============================================================================

def hat_to_dict(hat: HatFunction) -> Dict[str, Any]:
    return {
        "start": _pairs(hat.start),
        "slope": [series_to_dict(s) for s in hat.slope],
    }


def hat_from_dict(data: Dict[str, Any]) -> HatFunction:
    slope = ChebVec([series_from_dict(s) for s in data["slope"]])
    prec = digits_to_bits(slope.digits)
    return HatFunction(tuple(ball_from_pair(pair, prec) for pair in data["start"]), slope)


def bundle_to_dict(bundle: FitBundle) -> Dict[str, Any]:
    digits = working_digits(bundle.digits)
    data: Dict[str, Any] = {
        "params": _params_dict(bundle.params),
        "digits": bundle.digits,
        "N": bundle.N,
        "alpha": to_decimal(bundle.alpha, digits),
        "omega": to_decimal(bundle.omega, digits),
        "t_alpha": to_decimal(bundle.t_alpha, digits),
        "t_omega": to_decimal(bundle.t_omega, digits),
        "eta": hat_to_dict(bundle.eta),
        "zeta": hat_to_dict(bundle.zeta),
    }
    for key in ("mu", "nu"):
        hat = getattr(bundle, key)
        if hat is not None:
            data[key] = hat_to_dict(hat)
    return data


def bundle_from_dict(data: Dict[str, Any]) -> FitBundle:
    digits = int(data["digits"])
    ctx = context(working_digits(digits))

    def real(key):
        return ctx.convert(from_decimal(data[key], ctx.dps))

    return FitBundle(
        params=Params(int(data["params"]["d1"]), int(data["params"]["d2"])),
        digits=digits,
        N=int(data["N"]),
        alpha=real("alpha"),
        omega=real("omega"),
        t_alpha=real("t_alpha"),
        t_omega=real("t_omega"),
        eta=hat_from_dict(data["eta"]),
        zeta=hat_from_dict(data["zeta"]),
        mu=hat_from_dict(data["mu"]) if "mu" in data else None,
        nu=hat_from_dict(data["nu"]) if "nu" in data else None,
    )


# =============================================================================
# Reports
# =============================================================================

def items_to_list(items: Sequence[CheckItem]) -> List[Dict[str, Any]]:
    return [item.to_dict() for item in items]


def report_to_dict(report: ResidualReport) -> Dict[str, Any]:
    digits = working_digits(report.digits)
    return {
        "params": _params_dict(report.params),
        "digits": report.digits,
        "N": report.N,
        "alpha": to_decimal(report.alpha, digits),
        "omega": to_decimal(report.omega, digits),
        "t_alpha": to_decimal(report.t_alpha, digits),
        "t_omega": to_decimal(report.t_omega, digits),
        "bounds": {k: ball_pair(v) for k, v in report.bounds().items()},
        "epsilon_achieved": decimal_up(report.epsilon_achieved),
        "endpoints": {k: _pairs(v) for k, v in report.endpoints.items()},
        "sobolev": {k: [_pairs(row) for row in rows] for k, rows in report.sobolev.items()},
        "linearized": {k: _pairs(v) for k, v in report.linearized.items()},
        "table_deltas": items_to_list(report.table_deltas),
    }


def verdicts_to_dict(verdicts: Sequence[Verdict]) -> Dict[str, Any]:
    return {v.name: v.to_dict() for v in verdicts}


def certificate_to_dict(cert: Certificate) -> Dict[str, Any]:
    g = cert.gronwall
    return {
        "epsilon": decimal_up(cert.epsilon),
        "ck_bounds": {
            side: {
                "C0": decimal_up(ck.c0, 4),
                "C1": decimal_up(ck.c1, 5),
                "C2": decimal_up(ck.c2, 6),
                "components": {k: [decimal_up(v, 5) for v in vals] for k, vals in ck.components.items()},
            }
            for side, ck in cert.ck_bounds.items()
        },
        "ic_c2_bound": {k: decimal_up(v) for k, v in cert.ic_c2_bound.items()},
        "error_c2": decimal_up(cert.error_c2),
        "gronwall": {
            "integral_eta": ball_pair(g.integral_eta),
            "integral_zeta": ball_pair(g.integral_zeta),
            "exponent": g.exponent,
            "log10_M": ball_pair(g.log10_M),
            "tight_exponent": ball_pair(g.tight_log),
        },
        "jacobian_inverse_norm": ball_pair(cert.jacobian_inv_norm),
        "thresholds": [t.to_dict() for t in cert.thresholds],
        "checks": items_to_list(cert.checks),
        "final_verdict": cert.final_verdict,
    }
