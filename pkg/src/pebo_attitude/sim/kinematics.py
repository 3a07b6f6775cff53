"""Attitude kinematics ``dR/dt = R omega_x`` and its transition matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import so3
from ..so3 import NumericalError
from .signals import OmegaSignal

REPROJECT_EVERY = 1000


@dataclass(frozen=True)
class Trajectory:
    """Ground-truth attitude samples on a uniform grid.

    ``omegas[k]`` is the rate applied over ``[times[k], times[k] + dt)``,
    i.e. ``omega(times[k] + dt / 2)``. A gyro model that reports these values
    lets a dynamic extension reproduce the truth propagation exactly.
    """

    times: np.ndarray
    rotations: np.ndarray
    omegas: np.ndarray
    dt: float

    def __post_init__(self):
        n = self.times.shape[0]
        if self.rotations.shape != (n, 3, 3) or self.omegas.shape != (n, 3):
            raise ValueError("trajectory arrays must have equal lengths")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def time_grid(dt: float, horizon: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    n = int(round(horizon / dt))
    return np.arange(n + 1) * dt


def propagate(R0, steps: np.ndarray, reproject_every: int = REPROJECT_EVERY) -> np.ndarray:
    """Right-multiply ``R0`` by a sequence of step rotations.

    Returns ``(len(steps) + 1, 3, 3)`` with ``out[k+1] = out[k] @ steps[k]``.
    """
    out = np.empty((steps.shape[0] + 1, 3, 3))
    R = np.array(R0, dtype=float)
    out[0] = R
    for k in range(steps.shape[0]):
        R = R @ steps[k]
        if reproject_every and (k + 1) % reproject_every == 0:
            R = so3.project_so3(R)
        out[k + 1] = R
    return out


def integrate_rates(R0, rates: np.ndarray, dt: float) -> np.ndarray:
    """Geometric integration of sampled rates: ``R_{k+1} = R_k exp(dt * rates[k])``.

    ``rates`` has one row per grid point; the last row is unused.
    """
    rates = np.asarray(rates, dtype=float)
    bad = ~np.all(np.isfinite(rates), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NumericalError(f"non-finite angular velocity at sample {k} (t = {k * dt:.6g} s)")
    steps = so3.exp_so3_batch(dt * rates[:-1])
    return propagate(R0, steps)


def integrate_attitude(R0, omega: OmegaSignal, dt: float, horizon: float) -> Trajectory:
    """Midpoint-rate geometric integrator; exact for constant ``omega``.

    ``R_{k+1} = R_k @ exp_so3(dt * omega(t_k + dt/2))``.
    """
    R0 = so3.as_rotation(R0)
    times = time_grid(dt, horizon)
    omegas = np.asarray(omega(times + 0.5 * dt), dtype=float).reshape(-1, 3)
    bad = ~np.all(np.isfinite(omegas), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NumericalError(f"non-finite omega at t = {times[k] + 0.5 * dt:.6g} s")
    rotations = integrate_rates(R0, omegas, dt)
    return Trajectory(times=times, rotations=rotations, omegas=omegas, dt=dt)


def _magnus4_generators(omega: OmegaSignal, t0: np.ndarray, h: float) -> np.ndarray:
    # fourth-order Magnus with two Gauss-Legendre nodes, for right-acting generators
    c = math.sqrt(3.0) / 6.0
    w1 = np.asarray(omega(t0 + (0.5 - c) * h), dtype=float).reshape(-1, 3)
    w2 = np.asarray(omega(t0 + (0.5 + c) * h), dtype=float).reshape(-1, 3)
    return 0.5 * h * (w1 + w2) + (math.sqrt(3.0) / 12.0 * h * h) * np.cross(w1, w2)


def transition_matrix(omega: OmegaSignal, s: float, t: float, max_step: float = 1e-3) -> np.ndarray:
    """State-transition matrix ``Phi(s, t) = Q(s)^T Q(t)`` of ``x' = omega_x x``.

    Integrated with a fourth-order Magnus scheme on a uniform sub-grid of
    ``[s, t]``; ``Phi(s, t) = Phi(t, s)^T`` for ``t < s``.
    """
    if t == s:
        return np.eye(3)
    if t < s:
        return transition_matrix(omega, t, s, max_step).T
    n = max(1, int(math.ceil((t - s) / max_step)))
    h = (t - s) / n
    steps = so3.exp_so3_batch(_magnus4_generators(omega, s + h * np.arange(n), h))
    Phi = np.eye(3)
    for k in range(n):
        Phi = Phi @ steps[k]
    return so3.project_so3(Phi) if n >= REPROJECT_EVERY else Phi


def transitions_from_zero(omega: OmegaSignal, grid, max_step: float = 1e-3) -> np.ndarray:
    """``Phi(0, t_k)`` for every point of a non-decreasing ``grid`` (``grid[0] >= 0``)."""
    grid = np.asarray(grid, dtype=float)
    out = np.empty((grid.size, 3, 3))
    Phi = transition_matrix(omega, 0.0, float(grid[0]), max_step)
    out[0] = Phi
    for k in range(1, grid.size):
        Phi = Phi @ transition_matrix(omega, float(grid[k - 1]), float(grid[k]), max_step)
        out[k] = Phi
    return out
