"""
cohom1 Parsers Package
Command-line value parsing and run configuration.
"""

from .run_config import RunConfig, build_config

__all__ = [
    "RunConfig",
    "build_config",
]
