import os
import logging
from dotenv import load_dotenv

load_dotenv()


def _int_from_env(name, default=None, minimum=None):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


DEFAULT_SEED = _int_from_env("TWISTED_DEFAULT_SEED", 20240101)
NUM_THREADS = _int_from_env("TWISTED_NUM_THREADS", None, minimum=1)
REPORTS_DIR = os.getenv("TWISTED_REPORTS_DIR", "Reports")
LOG_LEVEL = os.getenv("TWISTED_LOG_LEVEL", "INFO").upper()

if not isinstance(logging.getLevelName(LOG_LEVEL), int):
    raise ValueError(f"TWISTED_LOG_LEVEL is not a logging level: {LOG_LEVEL!r}")

# joblib worker count for probe sampling
JOBLIB_N_JOBS = NUM_THREADS or 1

# Numerical tolerances
ALGEBRA_TOL = 1e-10
SPECTRAL_RTOL = 1e-9
SUPPORT_TOL = 1e-14
MEMBERSHIP_TOL = 1e-12
INEQUALITY_TOL = 1e-12

EXHAUSTIVE_GROUP_LIMIT = 64
EXHAUSTIVE_TRIPLE_LIMIT = 20000
SAMPLED_TRIPLES = 4096
ABEL_POISSON_EPS = 1e-8
MAX_MODULE_RANK = 8
DENSE_SVD_LIMIT = 1500
DEFAULT_RADIUS_SCHEDULE = (4, 8, 16, 32)


def configure_logging(level=None):
    """Configure root logging once for command-line runs."""
    logging.basicConfig(
        level=level or LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
