"""
Digest Utilities Module
Fingerprints of run inputs and artifacts.
"""

import hashlib
import json
from typing import Any


def canonical_json(data: Any) -> str:
    """JSON text with sorted keys and no whitespace."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def digest(data: Any) -> str:
    """
    SHA-256 fingerprint of the canonical JSON of data.

    Args:
        data: JSON-serializable value (run config, artifact payload)

    Returns:
        First 16 hex characters of the hash
    """
    hash_obj = hashlib.sha256(canonical_json(data).encode("utf-8"))
    return hash_obj.hexdigest()[:16]
