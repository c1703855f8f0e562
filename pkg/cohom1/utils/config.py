"""
Runtime Configuration
Environment-driven defaults (optionally from a .env file). CLI flags win over
these values.
"""

import logging
import os

logger = logging.getLogger(__name__)

# =============================================================================
# Configuration
# =============================================================================

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

THREADS = max(1, int(os.getenv("COHOM1_THREADS", str(min(4, os.cpu_count() or 1)))))
GUARD_DIGITS = int(os.getenv("COHOM1_GUARD_DIGITS", "20"))
DEFAULT_RHO = os.getenv("COHOM1_RHO", "0.3")
OUT_DIR = os.getenv("COHOM1_OUT_DIR", "runs")
LOG_LEVEL = os.getenv("COHOM1_LOG_LEVEL", "INFO").upper()


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Install the root handler. Only entry points call this."""
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger.debug(f"[CONFIG] threads={THREADS} guard_digits={GUARD_DIGITS} rho={DEFAULT_RHO}")
