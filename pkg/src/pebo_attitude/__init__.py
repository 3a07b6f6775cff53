"""Attitude estimation from a single vector measurement on SO(3).

A dynamic extension ``Q`` driven by the gyro turns the problem into
identifying the constant rotation ``Qc = Q R^T``; :mod:`.observers` estimates
it and :mod:`.observability` checks when that is possible.
"""

from . import observability, observers, sim, so3
from .observers import (
    Observer1,
    Observer1Gains,
    Observer2,
    Observer2Gains,
    Pebo,
    baseline_observer,
    lyapunov_v,
)

__version__ = "0.1.0"

__all__ = [
    "Observer1",
    "Observer1Gains",
    "Observer2",
    "Observer2Gains",
    "Pebo",
    "baseline_observer",
    "lyapunov_v",
    "observability",
    "observers",
    "sim",
    "so3",
]
