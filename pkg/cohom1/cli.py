"""
Cohom1 Command Line
Batch driver for the existence proof: heuristic solves, shooting,
linearization, verification, certification and curve sampling.
"""

import argparse
import functools
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cohom1.errors import Cohom1Error, DomainError
from cohom1.numerics.precision import decimal_up, from_decimal, parse_decimal
from cohom1.parsers.run_config import MODES, RunConfig, build_config
from cohom1.proof.certify import Certificate, final_verdict
from cohom1.proof.reference import CheckItem, ReferenceValues
from cohom1.proof.verify import (
    FitBundle,
    ResidualReport,
    Verdict,
    assess,
    check_assumption1,
    check_assumption2,
    fit_bundle,
    linearization_items,
)
from cohom1.solvers.shooting import (
    LinearizationResult,
    ShotResult,
    broyden_solve,
    fd_linearize,
    find_crossings,
    sample_curve,
    shoot_A,
    shoot_Omega,
)
from cohom1.solvers.system import Params
from cohom1.utils import config
from cohom1.utils.formatters import (
    format_certificate,
    format_crossings,
    format_linearization,
    format_report,
    format_shot,
)
from cohom1.utils.serialization import (
    bundle_from_dict,
    bundle_to_dict,
    certificate_to_dict,
    envelope,
    items_to_list,
    linearization_from_dict,
    linearization_to_dict,
    path_records,
    read_json,
    report_to_dict,
    shot_to_dict,
    verdicts_to_dict,
    write_csv,
    write_json,
    write_jsonl,
)

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

HEURISTIC_ETA = "heuristic_eta.jsonl"
HEURISTIC_ZETA = "heuristic_zeta.jsonl"
SHOOT_JSON = "shoot.json"
FITS_JSON = "fits.json"
LINEARIZE_JSON = "linearize.json"
VERIFY_JSON = "verify.json"
CERTIFICATE_JSON = "certificate.json"
CURVES_CSV = "curves.csv"
REPORT_TXT = "report.txt"

CURVE_FIELDS = ("curve", "param", "v1", "v2", "t_stop")


@dataclass
class StageOutcome:
    """Exit code plus the report sections a command produced."""

    code: int = EXIT_PASS
    sections: List[str] = field(default_factory=list)

    def add(self, text: str) -> None:
        self.sections.append(text)

    def fail_if(self, failed: bool) -> None:
        if failed:
            self.code = EXIT_FAIL


# ---------------------------
# Helpers
# ---------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohom1",
        description="Computer-assisted existence proof for cohomogeneity-one Einstein metrics on spheres.",
    )
    parser.add_argument("mode", choices=MODES, help="pipeline stage to run")
    parser.add_argument("--d1", default=2, help="dimension of the first sphere factor (default 2)")
    parser.add_argument("--d2", default=9, help="dimension of the second sphere factor (default 9)")
    parser.add_argument(
        "--digits",
        default=30,
        help=(
            "solve precision d in decimal digits (default 30); linearization targets floor(2d/3) "
            f"and solves at ceil(1.5 * floor(2d/3)); working precision is d + {config.GUARD_DIGITS}"
        ),
    )
    parser.add_argument("--rho", default=None, help=f"Taylor normalization (default {config.DEFAULT_RHO})")
    parser.add_argument("--seed", default=None, help="initial slopes alpha,omega (default 6.08,6.18)")
    parser.add_argument("--trange", "--params-range", dest="trange", default=None, help="curve parameter range lo,hi")
    parser.add_argument("--samples", default=200, help="curve samples per branch (default 200)")
    parser.add_argument("--out", default=None, help=f"artifact directory (default {config.OUT_DIR})")
    parser.add_argument("--epsilon", default=None, help="bound for the assumption checks (default: next power of ten)")
    parser.add_argument("--log-level", dest="log_level", default=None, help="logging level")
    parser.add_argument("--from", dest="from_dir", default=None, help="read earlier stage artifacts from this directory")
    return parser


def _path(directory: str, name: str) -> str:
    return os.path.join(directory, name)


def _params(cfg: RunConfig) -> Params:
    return Params(cfg.d1, cfg.d2)


def _inputs(cfg: RunConfig) -> Dict:
    return cfg.to_dict()


def decade_above(value: Fraction) -> Fraction:
    """Smallest power of ten strictly above value."""
    if value <= 0:
        raise DomainError(f"Expected a positive bound, got {value}")
    k = len(str(value.numerator)) - len(str(value.denominator))
    while Fraction(10) ** k <= value:
        k += 1
    while Fraction(10) ** (k - 1) > value:
        k -= 1
    return Fraction(10) ** k


def _epsilon(cfg: RunConfig, report: ResidualReport) -> Fraction:
    if cfg.epsilon is not None:
        return parse_decimal(cfg.epsilon)[0]
    return decade_above(report.epsilon_achieved)


def _is_reference_system(cfg: RunConfig) -> bool:
    return (cfg.d1, cfg.d2) == (2, 9)


def _pair_concurrently(first: Callable, second: Callable):
    with ThreadPoolExecutor(max_workers=min(2, config.THREADS)) as pool:
        a, b = pool.submit(first), pool.submit(second)
        return a.result(), b.result()


def tagged(stage: str) -> Callable:
    """Mark Cohom1Errors escaping the wrapped stage with `stage` (innermost tag wins)."""

    def decorate(fn: Callable) -> Callable:
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except Cohom1Error as exc:
                if exc.stage is None:
                    exc.stage = stage
                raise

        return wrapper

    return decorate


# ---------------------------
# Stages
# ---------------------------

def _write_paths(cfg: RunConfig, shot_a: ShotResult, shot_o: ShotResult) -> None:
    write_jsonl(_path(cfg.out_dir, HEURISTIC_ETA), path_records(shot_a))
    write_jsonl(_path(cfg.out_dir, HEURISTIC_ZETA), path_records(shot_o))


def _shoot_deltas(shot_a: ShotResult, shot_o: ShotResult) -> List[CheckItem]:
    reference = ReferenceValues()
    items = reference.match("shooting", "alpha", [shot_a.parameter])
    items += reference.match("shooting", "omega", [shot_o.parameter])
    items += reference.match("shooting", "t_alpha", [shot_a.t_stop])
    items += reference.match("shooting", "t_omega", [shot_o.t_stop])
    return items


@tagged("SHOOT")
def stage_shoot(cfg: RunConfig, outcome: StageOutcome) -> Tuple[ShotResult, ShotResult]:
    """Broyden solve from the seeds; writes shoot.json and both coefficient dumps."""
    p = _params(cfg)
    alpha, omega, shot_a, shot_o = broyden_solve(cfg.seeds[0], cfg.seeds[1], cfg.digits, p, cfg.rho)
    logger.info(f"[CLI] solved alpha={float(alpha):.10f} omega={float(omega):.10f}")
    deltas = _shoot_deltas(shot_a, shot_o) if _is_reference_system(cfg) else []
    _write_paths(cfg, shot_a, shot_o)
    write_json(
        _path(cfg.out_dir, SHOOT_JSON),
        envelope(
            "shoot",
            cfg.digits,
            {"A": shot_to_dict(shot_a), "Omega": shot_to_dict(shot_o), "deltas": items_to_list(deltas)},
            _inputs(cfg),
        ),
    )
    outcome.add(format_shot(shot_a, shot_o, deltas))
    return shot_a, shot_o


def _solved_parameters(cfg: RunConfig, outcome: StageOutcome):
    """(alpha, omega) from an earlier shoot.json when --from is given, else a fresh solve."""
    if cfg.from_dir:
        data = read_json(_path(cfg.from_dir, SHOOT_JSON))
        return from_decimal(data["A"]["parameter"]), from_decimal(data["Omega"]["parameter"])
    shot_a, shot_o = stage_shoot(cfg, outcome)
    return shot_a.parameter, shot_o.parameter


@tagged("LINEARIZE")
def stage_linearize(cfg: RunConfig, outcome: StageOutcome, alpha, omega) -> LinearizationResult:
    """Finite-difference linearization with d_target = floor(2 d / 3)."""
    lin = fd_linearize(alpha, omega, (2 * cfg.digits) // 3, _params(cfg), cfg.rho)
    items = linearization_items(lin) if _is_reference_system(cfg) else []
    write_json(
        _path(cfg.out_dir, LINEARIZE_JSON),
        envelope(
            "linearize",
            lin.digits,
            {"linearization": linearization_to_dict(lin), "deltas": items_to_list(items)},
            _inputs(cfg),
        ),
    )
    outcome.add(format_linearization(lin, items))
    outcome.fail_if(any(not item.passed for item in items))
    return lin


@tagged("FIT")
def stage_fit(cfg: RunConfig, lin: LinearizationResult) -> FitBundle:
    bundle = fit_bundle(lin.shots["alpha"], lin.shots["omega"], cfg.digits, lin)
    write_json(_path(cfg.out_dir, FITS_JSON), envelope("fits", cfg.digits, {"fits": bundle_to_dict(bundle)}, _inputs(cfg)))
    return bundle


@tagged("VERIFY")
def stage_verify(cfg: RunConfig, outcome: StageOutcome, bundle: FitBundle) -> Tuple[ResidualReport, List[Verdict], Fraction]:
    report = assess(bundle)
    eps = _epsilon(cfg, report)
    verdicts = [check_assumption1(report, eps), check_assumption2(report, eps)]
    write_json(
        _path(cfg.out_dir, VERIFY_JSON),
        envelope(
            "verify",
            bundle.digits,
            {"epsilon": decimal_up(eps), "report": report_to_dict(report), "verdicts": verdicts_to_dict(verdicts)},
            _inputs(cfg),
        ),
    )
    outcome.add(format_report(report, verdicts))
    outcome.fail_if(not all(v.passed for v in verdicts))
    return report, verdicts, eps


@tagged("CERTIFY")
def stage_certify(
    cfg: RunConfig,
    outcome: StageOutcome,
    report: ResidualReport,
    verdicts: Sequence[Verdict],
    eps: Fraction,
    lin: LinearizationResult,
) -> Certificate:
    cert = final_verdict(report, lin, eps, assumptions_passed=all(v.passed for v in verdicts))
    write_json(
        _path(cfg.out_dir, CERTIFICATE_JSON),
        envelope("certificate", report.digits, {"certificate": certificate_to_dict(cert)}, _inputs(cfg)),
    )
    outcome.add(format_certificate(cert))
    outcome.fail_if(not cert.final_verdict)
    return cert


# ---------------------------
# Commands
# ---------------------------

def cmd_heuristic(cfg: RunConfig, outcome: StageOutcome) -> None:
    """Propagate eta at the alpha seed and zeta at the omega seed up to their stopping times."""
    p = _params(cfg)
    shot_a, shot_o = _pair_concurrently(
        lambda: shoot_A(p, cfg.seeds[0], cfg.digits, cfg.rho),
        lambda: shoot_Omega(p, cfg.seeds[1], cfg.digits, cfg.rho),
    )
    _write_paths(cfg, shot_a, shot_o)
    outcome.add(format_shot(shot_a, shot_o))


def cmd_shoot(cfg: RunConfig, outcome: StageOutcome) -> None:
    stage_shoot(cfg, outcome)


def cmd_linearize(cfg: RunConfig, outcome: StageOutcome) -> None:
    alpha, omega = _solved_parameters(cfg, outcome)
    stage_linearize(cfg, outcome, alpha, omega)


def cmd_verify(cfg: RunConfig, outcome: StageOutcome) -> None:
    """Assumption checks on fits.json from --from, or on a fresh shoot, linearize and fit."""
    if cfg.from_dir:
        bundle = bundle_from_dict(read_json(_path(cfg.from_dir, FITS_JSON))["fits"])
    else:
        alpha, omega = _solved_parameters(cfg, outcome)
        lin = stage_linearize(cfg, outcome, alpha, omega)
        bundle = stage_fit(cfg, lin)
    stage_verify(cfg, outcome, bundle)


def cmd_certify(cfg: RunConfig, outcome: StageOutcome) -> None:
    """Certificate from the fits.json and linearize.json artifacts."""
    source = cfg.source_dir
    bundle = bundle_from_dict(read_json(_path(source, FITS_JSON))["fits"])
    lin = linearization_from_dict(read_json(_path(source, LINEARIZE_JSON))["linearization"])
    report, verdicts, eps = stage_verify(cfg, outcome, bundle)
    stage_certify(cfg, outcome, report, verdicts, eps, lin)


def cmd_curves(cfg: RunConfig, outcome: StageOutcome) -> None:
    """Sample A(alpha) and Omega(omega) over the range; rows of failed points keep empty cells."""
    p = _params(cfg)
    lo, hi = (float(parse_decimal(v)[0]) for v in cfg.trange)
    grid = np.linspace(lo, hi, cfg.samples)
    curve_a, curve_o = _pair_concurrently(
        lambda: sample_curve(p, grid, cfg.digits, cfg.rho),
        lambda: sample_curve(p, grid, cfg.digits, cfg.rho, mirrored=True),
    )
    rows = [{"curve": "A", **row} for row in curve_a] + [{"curve": "Omega", **row} for row in curve_o]
    write_csv(_path(cfg.out_dir, CURVES_CSV), rows, CURVE_FIELDS)
    crossings = find_crossings(curve_a, curve_o)
    logger.info(f"[CLI] {len(crossings)} curve crossings in [{lo}, {hi}]")
    outcome.add(format_crossings(crossings))


def cmd_full(cfg: RunConfig, outcome: StageOutcome) -> None:
    """shoot, linearize, fit, verify and certify in one run."""
    shot_a, shot_o = stage_shoot(cfg, outcome)
    lin = stage_linearize(cfg, outcome, shot_a.parameter, shot_o.parameter)
    bundle = stage_fit(cfg, lin)
    report, verdicts, eps = stage_verify(cfg, outcome, bundle)
    stage_certify(cfg, outcome, report, verdicts, eps, lin)


COMMANDS: Dict[str, Callable[[RunConfig, StageOutcome], None]] = {
    "heuristic": cmd_heuristic,
    "shoot": cmd_shoot,
    "linearize": cmd_linearize,
    "verify": cmd_verify,
    "certify": cmd_certify,
    "curves": cmd_curves,
    "full": cmd_full,
}


# ---------------------------
# Entry point
# ---------------------------

def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg, errors = build_config(args)
    if errors:
        for error in errors:
            print(f"[CONFIG] {error}", file=sys.stderr)
        return EXIT_ERROR

    config.configure_logging(cfg.log_level)
    logger.info(f"[CLI] {cfg.mode} ({cfg.d1},{cfg.d2}) digits={cfg.digits} out={cfg.out_dir}")
    outcome = StageOutcome()
    try:
        COMMANDS[cfg.mode](cfg, outcome)
    except Cohom1Error as exc:
        stage = exc.stage or cfg.mode.upper()
        message = f"[{stage}] {type(exc).__name__}: {exc}"
        outcome.add(message)
        write_report(cfg, outcome)
        print(message, file=sys.stderr)
        return EXIT_ERROR

    print(write_report(cfg, outcome))
    return outcome.code


def write_report(cfg: RunConfig, outcome: StageOutcome) -> str:
    """Write the collected sections to report.txt, including those of a run that stopped early."""
    text = "\n\n".join(outcome.sections)
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(_path(cfg.out_dir, REPORT_TXT), "w") as f:
        f.write(text + "\n")
    return text
