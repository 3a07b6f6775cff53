"""Single-vector attitude observers built on a dynamic extension.

The extension ``Q' = Q omega_x`` turns attitude estimation into
identification of the constant rotation ``Qc = Q R^T``. Every observer here
works on an auxiliary pair ``(y_c, b_c)`` with ``y_c = Qc b_c``:

* complementary sensor ``y_B = R^T g``:  ``y_c = Q y_B``, ``b_c = g``
* compatible sensor ``y_I = R b``:       ``y_c = y_I``,  ``b_c = Q b``
* delayed or intermittent samples: see :func:`adapt_delayed` and
  :func:`adapt_intermittent`.

The estimate is ``R_hat = Qc_hat^T Q``. ``Qc_hat`` is advanced by left
multiplication with ``exp_so3(dt * eta)`` so it never leaves SO(3).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import so3

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def _block(first: bool) -> np.ndarray:
    out = np.eye(3)
    if first:
        out[:2, :2] = J2
    else:
        out[1:, 1:] = J2
    return out


# diag(J, 1) @ diag(1, J): a cyclic permutation, axis (1, 1, 1)/sqrt(3), angle 2 pi / 3
VIRTUAL_ROTATION = _block(True) @ _block(False)
VIRTUAL_ROTATION.setflags(write=False)
_I3 = np.eye(3)
_I3.setflags(write=False)


def virtual_margin(g) -> float:
    """``|g x U g|``; zero only on the fixed axis of ``U``."""
    g = np.asarray(g, dtype=float)
    return float(np.linalg.norm(np.cross(g, VIRTUAL_ROTATION @ g)))


def lyapunov_v(Qc_hat, Qc_true) -> float:
    """``3 - tr(Qc_hat Qc^T)``, in ``[0, 4]`` and zero iff the estimate is exact."""
    return 3.0 - float(np.trace(np.asarray(Qc_hat) @ np.asarray(Qc_true).T))


class Pebo:
    """Dynamic extension ``Q' = Q omega_x`` driven by measured rates."""

    def __init__(self, Q0=None, t0: float = 0.0):
        self.Q = np.eye(3) if Q0 is None else so3.as_rotation(Q0)
        self.t = float(t0)

    def step(self, omega, dt: float) -> np.ndarray:
        if not dt > 0:
            raise ValueError("dt must be > 0")
        w0, w1, w2 = omega
        self.Q = self.Q @ so3.exp_xyz(dt * w0, dt * w1, dt * w2)
        self.t += dt
        return self.Q

    def constant_of(self, R) -> np.ndarray:
        """``Qc = Q R^T`` for a known attitude ``R`` at the current time."""
        return self.Q @ np.asarray(R).T


@dataclass(frozen=True)
class Observer1Gains:
    """Proportional gain, integral gain and excitation horizon ``T`` (s).

    ``gamma_I = 0`` gives the proportional-only baseline.
    """

    gamma_P: float = 3.0
    gamma_I: float = 1.0
    T: float = 10.0

    def __post_init__(self):
        if not self.gamma_P > 0:
            raise ValueError("gamma_P must be > 0")
        if not self.gamma_I >= 0:
            raise ValueError("gamma_I must be >= 0")
        if not self.T > 0:
            raise ValueError("T must be > 0")


class Observer1:
    """Proportional + integral observer.

    ``eta = gamma_P (Qc_hat b_c) x y_c + gamma_I xi`` with
    ``xi = 2 vex(skew(A Qc_hat^T))`` and ``A' = y_c b_c^T`` accumulated over
    ``[0, T)`` and frozen afterwards.

    Parameters
    ----------
    gains : Observer1Gains
    Qc_hat0 : array_like, optional
        Initial estimate of ``Qc`` (identity by default).
    mode : {"fixed", "adaptive", "window"}
        ``fixed`` integrates ``A`` on ``[0, T)``. ``adaptive`` ignores ``T``
        and freezes ``A`` once ``int |b_c(t0) x b_c(t)| dt`` exceeds
        ``delta``. ``window`` keeps ``A`` over the sliding interval
        ``[t - T, t]``.
    delta : float
        Excitation level for the adaptive mode.
    """

    MODES = ("fixed", "adaptive", "window")

    def __init__(self, gains: Observer1Gains = Observer1Gains(), Qc_hat0=None, mode: str = "fixed",
                 delta: float = 0.1):
        if mode not in self.MODES:
            raise ValueError(f"mode must be one of {self.MODES}, got {mode!r}")
        self.gains = gains
        self.mode = mode
        self.delta = delta
        self.Qc_hat = np.eye(3) if Qc_hat0 is None else so3.as_rotation(Qc_hat0)
        self.A = np.zeros((3, 3))
        self.t = 0.0
        self.frozen = False
        self.eta = np.zeros(3)
        self._anchor = None
        self._margin = 0.0
        self._window = deque()

    @property
    def excitation_margin(self) -> float:
        """Accumulated ``int |b_c(t0) x b_c(t)| dt`` (adaptive mode)."""
        return self._margin

    def correction(self, y_c, b_c) -> tuple[float, float, float]:
        """Innovation ``eta`` for the current state (no state change)."""
        gP, gI = self.gains.gamma_P, self.gains.gamma_I
        Qc = self.Qc_hat
        ex, ey, ez = so3.cross3((Qc @ b_c).tolist(), y_c)
        ex, ey, ez = gP * ex, gP * ey, gP * ez
        if gI:
            m = (self.A @ Qc.T).tolist()
            ex += gI * (m[2][1] - m[1][2])
            ey += gI * (m[0][2] - m[2][0])
            ez += gI * (m[1][0] - m[0][1])
        return ex, ey, ez

    def _accumulate(self, y_c, b_c, dt: float) -> None:
        if self.gains.gamma_I == 0:
            return
        if self.mode == "fixed":
            if self.t < self.gains.T:
                self.A = self.A + dt * np.outer(y_c, b_c)
            else:
                self.frozen = True
        elif self.mode == "adaptive":
            if self.frozen:
                return
            b = np.asarray(b_c, dtype=float)
            if self._anchor is None:
                self._anchor = b / np.linalg.norm(b)
            self._margin += dt * float(np.linalg.norm(np.cross(self._anchor, b))) / float(np.linalg.norm(b))
            self.A = self.A + dt * np.outer(y_c, b_c)
            if self._margin > self.delta:
                self.frozen = True
        else:
            inc = dt * np.outer(y_c, b_c)
            self._window.append((self.t, inc))
            self.A = self.A + inc
            while self._window and self._window[0][0] < self.t - self.gains.T + 0.5 * dt:
                _, old = self._window.popleft()
                self.A = self.A - old

    def update(self, y_c, b_c, dt: float) -> np.ndarray:
        """Advance by ``dt`` with the auxiliary pair ``(y_c, b_c)``; returns ``Qc_hat``."""
        ex, ey, ez = self.correction(y_c, b_c)
        self._accumulate(y_c, b_c, dt)
        self.Qc_hat = so3.exp_xyz(dt * ex, dt * ey, dt * ez) @ self.Qc_hat
        self.eta = np.array((ex, ey, ez))
        self.t += dt
        return self.Qc_hat

    def step(self, Q, y_B, g, dt: float) -> np.ndarray:
        """Complementary-measurement step: ``y_c = Q y_B``, ``b_c = g``."""
        return self.update(np.asarray(Q) @ np.asarray(y_B), g, dt)

    def attitude(self, Q) -> np.ndarray:
        return self.Qc_hat.T @ np.asarray(Q)


def baseline_observer(gamma_P: float = 3.0, Qc_hat0=None) -> Observer1:
    """Proportional-only variant used for comparisons (current data only)."""
    return Observer1(Observer1Gains(gamma_P=gamma_P, gamma_I=0.0), Qc_hat0)


@dataclass(frozen=True)
class Observer2Gains:
    gamma_z: float = 1.0
    gamma: float = 1.0
    gamma_c: float = 1.0
    gamma_v: float = 1.0

    def __post_init__(self):
        for name in ("gamma_z", "gamma", "gamma_c", "gamma_v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


class Observer2:
    """Virtual-vector observer.

    An LTV filter ``(Z, Omega, P)`` identifies ``Qc^T`` from the single pair
    and provides a second, non-collinear pair ``b_v = U b_c``,
    ``y_v = P^T U b_c``::

        Z'     = gamma_z b_c (y_c^T - b_c^T Z)
        Omega' = -gamma_z b_c b_c^T Omega,          Omega(0) = I
        P'     = gamma (I - Omega)^T [Z - Omega Z0 - (I - Omega) P]
        eta    = gamma_c (Qc_hat b_c) x y_c + gamma_v (Qc_hat b_v) x y_v

    ``Z`` and ``Omega`` are advanced exactly for inputs held over the step
    (both generators act along ``b_c`` only), which keeps
    ``Z - Omega Z0 = (I - Omega) Qc^T`` exact on noise-free data. ``P`` uses
    an explicit Euler step.
    """

    def __init__(self, gains: Observer2Gains = Observer2Gains(), Qc_hat0=None, Z0=None, P0=None):
        self.gains = gains
        self.Qc_hat = np.eye(3) if Qc_hat0 is None else so3.as_rotation(Qc_hat0)
        self.Z = np.eye(3) if Z0 is None else np.array(Z0, dtype=float)
        self.Z0 = self.Z.copy()
        self.Omega = np.eye(3)
        self.P = np.eye(3) if P0 is None else np.array(P0, dtype=float)
        self.t = 0.0
        self.eta = np.zeros(3)
        self.virtual_margin = 0.0

    def filter_residual(self) -> np.ndarray:
        """``Z - Omega Z0 - (I - Omega) P``; zero when ``P`` equals ``Qc^T``."""
        return self.Z - self.Omega @ self.Z0 - (np.eye(3) - self.Omega) @ self.P

    def virtual_pair(self, b_c) -> tuple[np.ndarray, np.ndarray]:
        b_v = VIRTUAL_ROTATION @ np.asarray(b_c, dtype=float)
        return b_v, self.P.T @ b_v

    def correction(self, y_c, b_c) -> tuple[float, float, float]:
        g = self.gains
        Qc = self.Qc_hat
        b_v, y_v = self.virtual_pair(b_c)
        cx, cy, cz = so3.cross3((Qc @ b_c).tolist(), y_c)
        vx, vy, vz = so3.cross3((Qc @ b_v).tolist(), y_v.tolist())
        return (g.gamma_c * cx + g.gamma_v * vx, g.gamma_c * cy + g.gamma_v * vy, g.gamma_c * cz + g.gamma_v * vz)

    def update(self, y_c, b_c, dt: float) -> np.ndarray:
        g = self.gains
        b = np.asarray(b_c, dtype=float)
        y = np.asarray(y_c, dtype=float)
        Qc = self.Qc_hat
        b_v = VIRTUAL_ROTATION @ b
        y_v = self.P.T @ b_v
        bl, bvl = b.tolist(), b_v.tolist()
        cx, cy, cz = so3.cross3((Qc @ b).tolist(), y.tolist())
        vx, vy, vz = so3.cross3((Qc @ b_v).tolist(), y_v.tolist())
        ex = g.gamma_c * cx + g.gamma_v * vx
        ey = g.gamma_c * cy + g.gamma_v * vy
        ez = g.gamma_c * cz + g.gamma_v * vz
        n2 = bl[0] * bl[0] + bl[1] * bl[1] + bl[2] * bl[2]
        mx, my, mz = so3.cross3(bl, bvl)
        self.virtual_margin = math.sqrt((mx * mx + my * my + mz * mz) / n2) if n2 > 0 else 0.0

        phi_T = _I3 - self.Omega
        dP = g.gamma * phi_T.T @ (self.Z - self.Omega @ self.Z0 - phi_T @ self.P)
        if n2 > 0:
            a = -math.expm1(-g.gamma_z * dt * n2) / n2
            self.Z = self.Z + np.outer(a * b, y - b @ self.Z)
            self.Omega = self.Omega - np.outer(a * b, b @ self.Omega)
        self.P = self.P + dt * dP
        self.Qc_hat = so3.exp_xyz(dt * ex, dt * ey, dt * ez) @ Qc
        self.eta = np.array((ex, ey, ez))
        self.t += dt
        return self.Qc_hat

    def step(self, Q, y_B, g, dt: float) -> np.ndarray:
        return self.update(np.asarray(Q) @ np.asarray(y_B), g, dt)

    def attitude(self, Q) -> np.ndarray:
        return self.Qc_hat.T @ np.asarray(Q)


class QHistory:
    """Ring buffer of past extension values ``Q(t)`` on a uniform grid."""

    def __init__(self, dt: float, span: float):
        self.dt = float(dt)
        self._buf: deque = deque(maxlen=int(math.ceil(span / dt)) + 2)

    def push(self, t: float, Q) -> None:
        self._buf.append((float(t), np.array(Q, dtype=float)))

    def at(self, t: float) -> np.ndarray:
        if not self._buf:
            raise KeyError("empty history")
        t_first = self._buf[0][0]
        k = int(round((t - t_first) / self.dt))
        if k < 0 or k >= len(self._buf) or abs(self._buf[k][0] - t) > 0.5 * self.dt:
            raise KeyError(f"Q({t:.6g}) is not in the history window")
        return self._buf[k][1]


def adapt_delayed(history: QHistory, y_delayed, g_signal: Callable, t: float, tau: float):
    """Pair for a measurement delayed by a known ``tau``.

    ``y(t) = R(t - tau)^T g(t - tau)`` gives ``y_c = Q(t - tau) y(t)`` and
    ``b_c = g(t - tau)``. Returns ``None`` during warm-up (``t < tau``).
    """
    if t < tau - 1e-12:
        return None
    s = t - tau
    return history.at(s) @ np.asarray(y_delayed, dtype=float), np.asarray(g_signal(s), dtype=float)


def adapt_intermittent(sample_times, Q_samples, y_samples, g_samples, t: float):
    """Zero-order hold of ``(Q(t_i) y(t_i), g(t_i))`` for ``t`` in ``[t_i, t_{i+1})``.

    Returns ``None`` before the first sample.
    """
    sample_times = np.asarray(sample_times, dtype=float)
    i = int(np.searchsorted(sample_times, t + 1e-12, side="right")) - 1
    if i < 0:
        return None
    return np.asarray(Q_samples[i]) @ np.asarray(y_samples[i]), np.asarray(g_samples[i], dtype=float)


def complementary_pairs(Q, y_B, g):
    """Vectorised ``(Q y_B, g)`` for ``(N, 3, 3)``, ``(N, 3)``, ``(N, 3)`` input."""
    return np.einsum("nij,nj->ni", Q, y_B), np.asarray(g, dtype=float)


def compatible_pairs(Q, y_I, b):
    """Vectorised ``(y_I, Q b)`` for a compatible sensor."""
    return np.asarray(y_I, dtype=float), np.einsum("nij,nj->ni", Q, b)


def delayed_pairs(Q, y, g_delayed, delay_steps: int):
    """Vectorised delay adapter on a uniform grid.

    ``y[k]`` is the reading available at step ``k`` (taken at ``k - d``) and
    ``g_delayed[k] = g(t_k - tau)``. Rows before ``delay_steps`` are marked
    invalid (warm-up).
    """
    n = Q.shape[0]
    d = int(delay_steps)
    valid = np.arange(n) >= d
    y_c = np.zeros((n, 3))
    if d < n:
        y_c[d:] = np.einsum("nij,nj->ni", Q[: n - d], y[d:])
    return y_c, np.asarray(g_delayed, dtype=float), valid


def run_pairs(observer, y_c, b_c, dt: float, valid=None, callback: Optional[Callable] = None) -> np.ndarray:
    """Drive ``observer`` through pre-computed pairs on a uniform grid.

    Returns ``Qc_hat`` at every grid time, taken *before* the update of that
    step (``out[0]`` is the initial estimate). Invalid rows (warm-up) leave
    the observer untouched apart from its clock.
    """
    n = y_c.shape[0]
    out = np.empty((n, 3, 3))
    ys = y_c.tolist()
    bs = np.asarray(b_c, dtype=float)
    ok = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    for k in range(n):
        out[k] = observer.Qc_hat
        if callback is not None:
            callback(k, observer)
        if k == n - 1:
            break
        if ok[k]:
            observer.update(ys[k], bs[k], dt)
        else:
            observer.t += dt
    return out
