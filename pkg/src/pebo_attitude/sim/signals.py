"""Time signals driving the simulator: angular velocity and reference vectors.

Both signal types are callables accepting either a scalar time (returning a
``(3,)`` array) or an array of times (returning ``(N, 3)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def _vectorise(fn: Callable[[np.ndarray], np.ndarray], t):
    t_arr = np.asarray(t, dtype=float)
    out = fn(np.atleast_1d(t_arr))
    return out[0] if t_arr.ndim == 0 else out


def _piecewise_index(breaks: np.ndarray, t: np.ndarray) -> np.ndarray:
    # right-continuous: value i holds on [breaks[i-1], breaks[i])
    return np.searchsorted(breaks, t, side="right")


@dataclass(frozen=True)
class OmegaSignal:
    """Body angular velocity ``omega(t)`` in rad/s."""

    fn: Callable[[np.ndarray], np.ndarray]
    kind: str
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, t):
        return _vectorise(self.fn, t)

    @classmethod
    def constant(cls, omega) -> "OmegaSignal":
        w = np.array(omega, dtype=float).reshape(3)
        return cls(lambda t: np.tile(w, (t.shape[0], 1)), "constant", {"omega": w})

    @classmethod
    def piecewise(cls, switch_times, values) -> "OmegaSignal":
        """Piecewise-constant rate: ``values[i]`` on ``[switch_times[i-1], switch_times[i])``."""
        breaks = np.asarray(switch_times, dtype=float).reshape(-1)
        vals = np.asarray(values, dtype=float).reshape(-1, 3)
        if vals.shape[0] != breaks.size + 1:
            raise ValueError("piecewise omega needs len(values) == len(switch_times) + 1")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("switch times must be strictly increasing")
        return cls(
            lambda t: vals[_piecewise_index(breaks, t)],
            "piecewise",
            {"switch_times": breaks, "values": vals},
        )

    @classmethod
    def sinusoidal(cls, amplitude, frequency, phase=(0.0, 0.0, 0.0), offset=(0.0, 0.0, 0.0)) -> "OmegaSignal":
        """``offset + amplitude * sin(frequency * t + phase)`` per axis (frequency in rad/s)."""
        amp = np.array(amplitude, dtype=float).reshape(3)
        freq = np.array(frequency, dtype=float).reshape(3)
        ph = np.array(phase, dtype=float).reshape(3)
        off = np.array(offset, dtype=float).reshape(3)
        return cls(
            lambda t: off + amp * np.sin(freq * t[:, None] + ph),
            "sinusoidal",
            {"amplitude": amp, "frequency": freq, "phase": ph, "offset": off},
        )

    @classmethod
    def tabulated(cls, times, values) -> "OmegaSignal":
        """Linear interpolation of samples; held constant outside the table."""
        tt = np.asarray(times, dtype=float).reshape(-1)
        vv = np.asarray(values, dtype=float).reshape(-1, 3)
        if tt.size != vv.shape[0] or tt.size < 2:
            raise ValueError("tabulated omega needs matching times/values (>= 2 samples)")

        def fn(t):
            return np.stack([np.interp(t, tt, vv[:, i]) for i in range(3)], axis=1)

        return cls(fn, "tabulated", {"times": tt, "values": vv})


@dataclass(frozen=True)
class ReferenceSignal:
    """Known reference direction ``g(t)`` (inertial) or ``b(t)`` (body).

    ``derivative`` is the analytic time derivative when one is declared.
    For piecewise signals it is the derivative on each smooth piece; jumps
    contribute no impulse.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    kind: str
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, t):
        return _vectorise(self.fn, t)

    def rate(self, t):
        if self.derivative is None:
            raise ValueError(f"no analytic derivative declared for {self.kind} reference")
        return _vectorise(self.derivative, t)

    @classmethod
    def constant(cls, v) -> "ReferenceSignal":
        u = _unit(v)
        return cls(
            lambda t: np.tile(u, (t.shape[0], 1)),
            "constant",
            lambda t: np.zeros((t.shape[0], 3)),
            {"value": u},
        )

    @classmethod
    def piecewise_constant(cls, switch_times, values) -> "ReferenceSignal":
        breaks = np.asarray(switch_times, dtype=float).reshape(-1)
        vals = np.array([_unit(v) for v in np.asarray(values, dtype=float).reshape(-1, 3)])
        if vals.shape[0] != breaks.size + 1:
            raise ValueError("piecewise reference needs len(values) == len(switch_times) + 1")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("switch times must be strictly increasing")
        return cls(
            lambda t: vals[_piecewise_index(breaks, t)],
            "piecewise-constant",
            lambda t: np.zeros((t.shape[0], 3)),
            {"switch_times": breaks, "values": vals},
        )

    @classmethod
    def cone(cls, half_angle: float, rate: float, phase: float = 0.0) -> "ReferenceSignal":
        """Unit vector sweeping a cone about ``e3``; spans R^3 over any full turn."""
        sa, ca = np.sin(half_angle), np.cos(half_angle)

        def fn(t):
            th = rate * t + phase
            return np.stack([sa * np.cos(th), sa * np.sin(th), np.full_like(t, ca)], axis=1)

        def dfn(t):
            th = rate * t + phase
            return np.stack([-sa * rate * np.sin(th), sa * rate * np.cos(th), np.zeros_like(t)], axis=1)

        return cls(fn, "smooth", dfn, {"shape": "cone", "half_angle": half_angle, "rate": rate, "phase": phase})

    @classmethod
    def smooth(cls, fn, derivative=None) -> "ReferenceSignal":
        """Wrap a vectorised callable ``t -> (N, 3)`` returning unit vectors."""
        return cls(fn, "smooth", derivative, {"shape": "custom"})


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError(f"reference vector must be non-zero and finite, got {v!r}")
    return v / n


def example1_reference() -> ReferenceSignal:
    """``e1`` on ``[0, 5)`` s, ``e3`` afterwards."""
    return ReferenceSignal.piecewise_constant([5.0], [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


EXAMPLE1_OMEGA = (0.23, -0.5, 0.15)
EXAMPLE1_R0 = np.diag([-1.0, -1.0, 1.0])
EXAMPLE1_R0.setflags(write=False)
