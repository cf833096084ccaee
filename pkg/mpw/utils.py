import logging
import math
import os
from contextlib import contextmanager

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

BLAS_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def confidence_interval(values, confidence: float = 0.95) -> tuple:
    """(mean, half width) of a Student-t interval; half width 0 for fewer than two values."""
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    n = len(values)
    if n >= 2 and np.ptp(values) > 0:
        low, high = stats.t.interval(confidence, n - 1, loc=mean, scale=stats.sem(values))
        return mean, float((high - low) / 2)
    return mean, 0.0


def calculate_ci(values, confidence: float = 0.95, precision: int = 3) -> str:
    mean, half = confidence_interval(values, confidence)
    return f"{mean:.{precision}f} ± {half:.{precision}f}"


def worker_count(requested: int = None) -> int:
    """Pool size: ``requested`` (or all CPUs), capped by ``MPW_WORKERS``."""
    count = requested or os.cpu_count() or 1
    cap = os.environ.get("MPW_WORKERS")
    if cap:
        try:
            count = min(count, int(cap))
        except ValueError:
            logger.warning(f"ignoring MPW_WORKERS={cap!r}: not an integer")
    return max(1, int(count))


def format_float(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    # no "-0"
    return f"{value + 0.0:.12g}"


@contextmanager
def single_threaded_blas():
    """Pin BLAS/OpenMP to one thread for processes started inside the block."""
    saved = {name: os.environ.get(name) for name in BLAS_THREAD_VARS}
    os.environ.update({name: "1" for name in BLAS_THREAD_VARS})
    try:
        yield
    finally:
        for name, value in saved.items():
            if value is None:
                os.environ.pop(name, None)
            else:
                os.environ[name] = value
