"""
cohom1 Proof Package
Reference tables, residual verification and the final certificate.
"""

from .certify import build_certificate, final_verdict
from .reference import ReferenceValues
from .verify import assess, check_assumption1, check_assumption2, fit_bundle

__all__ = [
    "ReferenceValues",
    "fit_bundle",
    "assess",
    "check_assumption1",
    "check_assumption2",
    "build_certificate",
    "final_verdict",
]
