"""
Run Configuration Module
Parses and validates command-line values into a RunConfig.
"""

import re
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

from cohom1.errors import DomainError
from cohom1.numerics.precision import parse_decimal
from cohom1.utils import config

MODES = ("heuristic", "shoot", "linearize", "verify", "certify", "curves", "full")
MIN_DIGITS = 15
DEFAULT_SEEDS = ("6.08", "6.18")
DEFAULT_RANGE = ("0.5", "8")
DEFAULT_SAMPLES = 200

_NUMBER = re.compile(r"^\s*[+-]?\d+(\.\d*)?([eE][+-]?\d+)?\s*$")


@dataclass
class RunConfig:
    """
    One CLI invocation. Real values are kept as decimal strings so the
    stages can convert them at their own precision.
    """

    mode: str
    d1: int = 2
    d2: int = 9
    digits: int = 30
    rho: str = config.DEFAULT_RHO
    seeds: Tuple[str, str] = DEFAULT_SEEDS
    out_dir: str = config.OUT_DIR
    trange: Tuple[str, str] = DEFAULT_RANGE
    samples: int = DEFAULT_SAMPLES
    epsilon: Optional[str] = None
    log_level: str = config.LOG_LEVEL
    from_dir: Optional[str] = None

    @property
    def source_dir(self) -> str:
        """Artifact directory later stages read from."""
        return self.from_dir or self.out_dir

    def validate(self) -> List[str]:
        """
        Check the invariants of a run.

        Returns:
            List of error messages (empty when the config is usable)
        """
        errors = []
        if self.mode not in MODES:
            errors.append(f"Unknown mode: {self.mode} (expected one of {', '.join(MODES)})")
        if self.digits < MIN_DIGITS:
            errors.append(f"digits must be >= {MIN_DIGITS}, got {self.digits}")
        if self.d1 < 2 or self.d2 < 2:
            errors.append(f"d1 and d2 must be >= 2, got ({self.d1}, {self.d2})")
        for name, text in (("rho", self.rho), ("epsilon", self.epsilon)):
            if text is None:
                continue
            _, errs = parse_positive(text, name)
            errors.extend(errs)
        for i, seed in enumerate(self.seeds):
            _, errs = parse_positive(seed, f"seed[{i}]")
            errors.extend(errs)
        lo, errs_lo = parse_positive(self.trange[0], "range start")
        hi, errs_hi = parse_positive(self.trange[1], "range end")
        errors.extend(errs_lo + errs_hi)
        if lo is not None and hi is not None and lo >= hi:
            errors.append(f"Empty range: {self.trange[0]} >= {self.trange[1]}")
        if self.samples < 1:
            errors.append(f"samples must be >= 1, got {self.samples}")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("log_level")
        data.pop("from_dir")
        data.pop("out_dir")
        data["seeds"] = list(self.seeds)
        data["trange"] = list(self.trange)
        return data


# =============================================================================
# Flag value parsers
# =============================================================================

def parse_positive(text: str, name: str = "value") -> Tuple[Optional[Any], List[str]]:
    """
    Parse a positive decimal.

    Returns:
        Tuple of (exact Fraction value, error_messages)
        Returns (None, errors) if parsing fails
    """
    if text is None or not _NUMBER.match(str(text)):
        return None, [f"Invalid numeric value for {name}: {text}"]
    try:
        value, _ = parse_decimal(text)
    except DomainError as e:
        return None, [str(e)]
    if value <= 0:
        return None, [f"{name} must be positive, got {text}"]
    return value, []


def parse_pair(text: str, name: str = "pair") -> Tuple[Optional[Tuple[str, str]], List[str]]:
    """
    Parse "a,w" into two positive decimal strings.

    Returns:
        Tuple of ((first, second), error_messages)
        Returns (None, errors) if parsing fails
    """
    if text is None:
        return None, [f"Missing value for {name}"]
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        return None, [f"{name} expects two comma-separated values, got: {text}"]

    errors = []
    for part in parts:
        _, errs = parse_positive(part, name)
        errors.extend(errs)
    if errors:
        return None, errors
    return (parts[0], parts[1]), []


def parse_range(text: str, name: str = "range") -> Tuple[Optional[Tuple[str, str]], List[str]]:
    """Parse "lo,hi" with 0 < lo < hi."""
    pair, errors = parse_pair(text, name)
    if pair is None:
        return None, errors
    if parse_decimal(pair[0])[0] >= parse_decimal(pair[1])[0]:
        return None, [f"{name} must satisfy lo < hi, got {text}"]
    return pair, []


def parse_int(text: Any, name: str, minimum: int = 0) -> Tuple[Optional[int], List[str]]:
    try:
        value = int(str(text).strip())
    except (ValueError, TypeError):
        return None, [f"Invalid integer for {name}: {text}"]
    if value < minimum:
        return None, [f"{name} must be >= {minimum}, got {value}"]
    return value, []


def build_config(args: Any) -> Tuple[Optional[RunConfig], List[str]]:
    """
    Build a RunConfig from parsed argparse arguments.

    Returns:
        Tuple of (config, error_messages)
        Returns (None, errors) if any flag is invalid
    """
    errors: List[str] = []

    seeds = DEFAULT_SEEDS
    if getattr(args, "seed", None):
        seeds, errs = parse_pair(args.seed, "--seed")
        errors.extend(errs)

    trange = DEFAULT_RANGE
    if getattr(args, "trange", None):
        trange, errs = parse_range(args.trange, "--trange")
        errors.extend(errs)

    digits, errs = parse_int(args.digits, "--digits")
    errors.extend(errs)
    d1, errs = parse_int(args.d1, "--d1")
    errors.extend(errs)
    d2, errs = parse_int(args.d2, "--d2")
    errors.extend(errs)
    samples, errs = parse_int(args.samples, "--samples", minimum=1)
    errors.extend(errs)

    if errors:
        return None, errors

    cfg = RunConfig(
        mode=args.mode,
        d1=d1,
        d2=d2,
        digits=digits,
        rho=args.rho or config.DEFAULT_RHO,
        seeds=seeds,
        out_dir=args.out or config.OUT_DIR,
        trange=trange,
        samples=samples,
        epsilon=args.epsilon,
        log_level=(args.log_level or config.LOG_LEVEL).upper(),
        from_dir=getattr(args, "from_dir", None),
    )
    errors = cfg.validate()
    if errors:
        return None, errors
    return cfg, []
