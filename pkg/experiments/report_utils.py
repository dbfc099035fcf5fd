# experiments/report_utils.py

import logging
import math
from datetime import datetime
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd
import simplejson
from pytz import timezone

logger = logging.getLogger(__name__)


def _decimal(x: float) -> Optional[Decimal]:
    if not math.isfinite(x):
        return None
    return Decimal(f"{x:.17g}")


# Function to clean report payloads: floats to 17-digit decimals, nan and inf to None
def clean_payload(value):
    if isinstance(value, dict):
        return {str(k): clean_payload(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_payload(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean_payload(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _decimal(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return [_decimal(value.real), _decimal(value.imag)]
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if value is None or isinstance(value, str):
        return value
    return str(value)


def timestamp() -> str:
    return datetime.now(timezone("UTC")).isoformat()


def write_report(payload: Dict, directory: Path, stem: str) -> Path:
    """Write `<stem>.json`; keys sorted, floats at 17 significant digits."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{stem}.json"
    with open(path, "w") as f:
        simplejson.dump(clean_payload(payload), f, use_decimal=True, sort_keys=True, indent=2)
        f.write("\n")
    logger.info(f"Report written to {path}")
    return path


def write_tables(tables: Dict[str, pd.DataFrame], directory: Path, stem: str) -> Dict[str, Path]:
    """Write each table as `<stem>_<table>.csv` next to the report."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, frame in tables.items():
        path = directory / f"{stem}_{name}.csv"
        frame.to_csv(path, index=False, float_format="%.17g")
        paths[name] = path
    if paths:
        logger.info(f"Wrote {len(paths)} tables for {stem} to {directory}")
    return paths
