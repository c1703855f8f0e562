"""
Reference Values Module
Published heuristic values for the (2, 9) solution and the constants of the
existence proof, loaded from data/reference_values.json.
"""

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from cohom1.errors import DomainError
from cohom1.numerics.precision import Ball, decimal_up, parse_decimal, to_fraction


@dataclass(frozen=True)
class CheckItem:
    """One itemized comparison: passed iff bound <= threshold (or < for strict items)."""

    item: str
    bound: Fraction
    threshold: Fraction
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "item": self.item,
            "bound": decimal_up(self.bound),
            "threshold": decimal_up(self.threshold),
            "pass": self.passed,
        }


def exact(value: Any) -> Fraction:
    """Exact rational value of a decimal string, int, Fraction or mpf."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_decimal(value)[0]
    return to_fraction(value)


def upper_of(value: Any) -> Fraction:
    """Exact upper bound of |value| for Balls and plain numbers."""
    if isinstance(value, Ball):
        return to_fraction(value.mag())
    return abs(exact(value))


class ReferenceValues:
    """
    Lookup and comparison against the reference tables.

    "match" groups compare within the group tolerance; "upper" groups
    require the computed upper bound to stay at or below the tabulated value.
    """

    def __init__(self, config_path: Optional[str] = None):
        if config_path is None:
            config_path = os.path.join(
                os.path.dirname(__file__),
                "..",
                "data",
                "reference_values.json"
            )

        with open(config_path, "r") as f:
            config = json.load(f)

        self.system = config["system"]
        self.groups = {g["id"]: g for g in config["groups"]}
        self.constants = config["constants"]
        self.extended_run = config["extended_run"]

    def _group(self, group_id: str) -> Dict[str, Any]:
        if group_id not in self.groups:
            raise DomainError(f"Unknown reference group: {group_id}")
        return self.groups[group_id]

    def value(self, group_id: str, key: str) -> List[Fraction]:
        group = self._group(group_id)
        if key not in group["values"]:
            raise DomainError(f"Unknown reference value: {group_id}.{key}")
        return [exact(v) for v in group["values"][key]]

    def scalar(self, group_id: str, key: str) -> Fraction:
        return self.value(group_id, key)[0]

    def tolerance(self, group_id: str) -> Fraction:
        return exact(self._group(group_id)["tolerance"])

    def constant(self, name: str) -> Fraction:
        if name not in self.constants:
            raise DomainError(f"Unknown proof constant: {name}")
        return exact(self.constants[name])

    def constants_list(self, name: str) -> List[Fraction]:
        return [exact(v) for v in self.constants[name]]

    def match(self, group_id: str, key: str, computed: Sequence[Any]) -> List[CheckItem]:
        """
        Itemized |computed - reference| <= tolerance checks.

        For Balls the distance is the largest one over the ball.
        """
        group = self._group(group_id)
        if group["kind"] != "match":
            raise DomainError(f"{group_id} holds upper bounds, use upper()")
        reference = self.value(group_id, key)
        tol = self.tolerance(group_id)
        if len(computed) < len(reference):
            raise DomainError(f"{group_id}.{key}: expected {len(reference)} values, got {len(computed)}")
        items = []
        for i, ref in enumerate(reference):
            value = computed[i]
            if isinstance(value, Ball):
                delta = to_fraction((value - Ball.exact(ref, value.prec)).mag())
            else:
                delta = abs(exact(value) - ref)
            name = f"{group_id}.{key}" if len(reference) == 1 else f"{group_id}.{key}[{i + 1}]"
            items.append(CheckItem(name, delta, tol, delta <= tol))
        return items

    def upper(self, group_id: str, key: str, computed: Sequence[Any]) -> List[CheckItem]:
        """Itemized computed-upper-bound <= tabulated-value checks."""
        group = self._group(group_id)
        if group["kind"] != "upper":
            raise DomainError(f"{group_id} holds matched values, use match()")
        reference = self.value(group_id, key)
        items = []
        for i, (value, ref) in enumerate(zip(computed, reference)):
            if value is None:
                continue
            bound = upper_of(value)
            items.append(CheckItem(f"{group_id}.{key}[{i}]", bound, ref, bound <= ref))
        return items
