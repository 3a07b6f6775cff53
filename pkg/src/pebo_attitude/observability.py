"""Distinguishability and excitation checks on sampled signals.

Conditions are evaluated on a finite time grid. A coarse grid can miss a
witness pair (false negative) but cannot invent one for a positive threshold.

Vector signals are callables ``t -> (3,)`` or ``(N,) -> (N, 3)`` such as
:class:`~pebo_attitude.sim.signals.ReferenceSignal`. ``g_signals`` are
inertial directions seen by body-frame sensors, ``b_signals`` body directions
seen by inertial-frame sensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import so3
from .sim.kinematics import transitions_from_zero

DEFAULT_THRESHOLD = 1e-6
MAX_GRID_POINTS = 2000
_CHUNK = 256

CONDITION_IDS = ("nec-suff", "modified", "trumpf", "single-vector", "three-moment")


@dataclass(frozen=True)
class ConditionReport:
    """Verdict of one observability condition.

    ``satisfied`` is ``margin > threshold``. ``witness_times`` are the grid
    times attaining the margin (empty when no pair exists).
    """

    condition_id: str
    satisfied: bool
    margin: float
    threshold: float
    witness_times: tuple = ()
    note: str = ""

    def __post_init__(self):
        if self.condition_id not in CONDITION_IDS:
            raise ValueError(f"unknown condition id {self.condition_id!r}")

    def as_dict(self) -> dict:
        return {
            "condition": self.condition_id,
            "satisfied": bool(self.satisfied),
            "margin": float(self.margin),
            "threshold": float(self.threshold),
            "witness_times": [float(t) for t in self.witness_times],
            "note": self.note,
        }


@dataclass(frozen=True)
class ExcitationReport:
    kind: str
    window_T: float
    delta: float
    threshold: float = 0.0
    window_start: float = 0.0

    @property
    def excited(self) -> bool:
        return self.delta > self.threshold


@dataclass(frozen=True)
class RegressorBatch:
    """Paired samples ``Y_i = R0^T phi_i`` with unit ``phi_i``."""

    times: np.ndarray
    Y: np.ndarray
    phi: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float).reshape(-1, 3)
        phi = np.asarray(self.phi, dtype=float).reshape(-1, 3)
        if Y.shape != phi.shape:
            raise ValueError("Y and phi must have the same number of columns")
        if not np.allclose(np.linalg.norm(phi, axis=1), 1.0, atol=1e-9):
            raise ValueError("phi columns must be unit vectors")
        times = np.asarray(self.times, dtype=float).reshape(-1)
        if times.shape[0] != Y.shape[0]:
            raise ValueError("times and columns differ in length")
        w = np.ones(Y.shape[0]) if self.weights is None else np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.Y.shape[0]

    def append(self, other: "RegressorBatch") -> "RegressorBatch":
        return RegressorBatch(np.concatenate([self.times, other.times]), np.vstack([self.Y, other.Y]),
                              np.vstack([self.phi, other.phi]), np.concatenate([self.weights, other.weights]))


def default_grid(horizon: float, dt: float = 1e-3, max_points: int = MAX_GRID_POINTS) -> np.ndarray:
    """Simulation grid on ``[0, horizon]`` decimated to at most ``max_points``."""
    n = int(round(horizon / dt))
    stride = max(1, int(np.ceil((n + 1) / max_points)))
    idx = np.arange(0, n + 1, stride)
    if idx[-1] != n:
        idx = np.append(idx, n) if idx.size < max_points else np.append(idx[:-1], n)
    return idx * dt


def _sample(signals, grid) -> list[np.ndarray]:
    return [np.asarray(s(grid), dtype=float).reshape(grid.size, 3) for s in signals]


def _pair_max(acc_fn, n: int):
    """Max and argmax of an ``(n, n)`` pair score built in row chunks."""
    best, arg = -1.0, (0, 0)
    for start in range(0, n, _CHUNK):
        block = acc_fn(slice(start, min(n, start + _CHUNK)))
        k = int(np.argmax(block))
        i, j = divmod(k, n)
        if block[i, j] > best:
            best, arg = float(block[i, j]), (start + i, j)
    return best, arg


def _cross_norms(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # |a_i x b_j| for all rows; a (m, 3), b (n, 3)
    c = np.cross(a[:, None, :], b[None, :, :])
    return np.sqrt(np.einsum("ijk,ijk->ij", c, c))


def _distinguishability(condition_id, g_signals, b_signals, omega, R0, grid, threshold, max_step, note=""):
    g_signals, b_signals = list(g_signals), list(b_signals)
    if not g_signals and not b_signals:
        raise ValueError("no measurements declared")
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) < 0) or grid[0] < 0:
        raise ValueError("grid must be a non-empty, non-decreasing array of times >= 0")
    gs = _sample(g_signals, grid)
    cs = []
    if b_signals:
        Phi = transitions_from_zero(omega, grid, max_step)
        cs = [np.einsum("nij,nj->ni", Phi, b) for b in _sample(b_signals, grid)]
    R0 = np.eye(3) if R0 is None else so3.as_rotation(R0)
    mixed = [c @ R0.T for c in cs]

    def score(rows: slice) -> np.ndarray:
        acc = np.zeros((rows.stop - rows.start, grid.size))
        for gi in gs:
            for gl in gs:
                acc += _cross_norms(gi[rows], gl)
            for m in mixed:
                acc += _cross_norms(gi[rows], m)
        for cj in cs:
            for ck in cs:
                acc += _cross_norms(cj[rows], ck)
        return acc

    margin, (i, j) = _pair_max(score, grid.size)
    return ConditionReport(condition_id, margin > threshold, margin, threshold,
                           (float(grid[i]), float(grid[j])), note)


def check_distinguishability(g_signals: Sequence, b_signals: Sequence, omega, R0, grid,
                             threshold: float = DEFAULT_THRESHOLD, max_step: float = 1e-3) -> ConditionReport:
    """Two-moment distinguishability test.

    The score of a pair ``(t1, t2)`` sums ``|g_i(t1) x g_l(t2)|``,
    ``|g_i(t1) x R0 Phi(0, t2) b_j(t2)|`` and
    ``|Phi(0, t1) b_j(t1) x Phi(0, t2) b_k(t2)|`` over all index pairs.
    The margin is the largest score over grid pairs.

    The mixed term needs the true initial attitude ``R0``, so for mixed
    sensor sets this is a diagnostic; see
    :func:`check_distinguishability_modified`.
    """
    g_signals, b_signals = list(g_signals), list(b_signals)
    note = "diagnostic (requires truth R0)" if g_signals and b_signals else ""
    cid = "single-vector" if len(g_signals) + len(b_signals) == 1 else "nec-suff"
    return _distinguishability(cid, g_signals, b_signals, omega, R0, grid, threshold, max_step, note)


def check_three_moment(g_signal, grid, threshold: float = DEFAULT_THRESHOLD) -> ConditionReport:
    """Largest ``|det [g(t1) g(t2) g(t3)]|`` over grid triples.

    A positive margin means a single reference direction spans R^3 over the
    grid, which the virtual-vector filter needs to identify the full
    rotation. Cost is cubic in the grid size; pass a few hundred points.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    g = np.asarray(g_signal(grid), dtype=float).reshape(grid.size, 3)
    n = grid.size
    best, arg = -1.0, (0, 0, 0)
    for i in range(n):
        c = np.cross(g[i], g)  # g(t1) x g(t2) for every t2
        d = np.abs(c @ g.T)
        k = int(np.argmax(d))
        j, l = divmod(k, n)
        if d[j, l] > best:
            best, arg = float(d[j, l]), (i, j, l)
    return ConditionReport("three-moment", best > threshold, best, threshold, tuple(float(grid[k]) for k in arg))


def check_distinguishability_modified(g_signals: Sequence, b_signals: Sequence, omega, grid,
                                      threshold: float = DEFAULT_THRESHOLD,
                                      max_step: float = 1e-3) -> ConditionReport:
    """Variant with ``R0`` dropped from the mixed term; holds for almost every ``R0``."""
    return _distinguishability("modified", g_signals, b_signals, omega, None, grid, threshold, max_step)


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    w = np.zeros(grid.size)
    if grid.size > 1:
        h = np.diff(grid)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
    return w


def _rate_samples(sig, grid: np.ndarray, numeric: bool) -> np.ndarray:
    deriv = getattr(sig, "derivative", None)
    if deriv is not None:
        return np.asarray(deriv(grid), dtype=float).reshape(grid.size, 3)
    if not numeric:
        raise ValueError(f"b signal {getattr(sig, 'kind', sig)!r} declares no derivative")
    vals = np.asarray(sig(grid), dtype=float).reshape(grid.size, 3)
    return np.gradient(vals, grid, axis=0, edge_order=1)


def check_trumpf(g_signals: Sequence, b_signals: Sequence, omega, window_T: float,
                 threshold: float = DEFAULT_THRESHOLD, n_points: int = 20001,
                 numeric_derivatives: bool = True) -> ConditionReport:
    """Sufficient condition on ``[0, window_T]``.

    ``lambda_2(sum_i int g_i g_i^T) + || int sum_j (omega x b_j + b_j') ||``.
    The Gramian uses the midpoint rule (exact for piecewise-constant
    references whose switches fall on cell boundaries); the second term uses
    the trapezoid rule. ``b'`` is the declared derivative on each smooth
    piece; central differences are the fallback for smooth signals that
    declare none.
    """
    g_signals, b_signals = list(g_signals), list(b_signals)
    if not g_signals and not b_signals:
        raise ValueError("no measurements declared")
    if not window_T > 0:
        raise ValueError("window_T must be > 0")
    lam2 = 0.0
    if g_signals:
        h = window_T / (n_points - 1)
        mid = (np.arange(n_points - 1) + 0.5) * h
        G = np.zeros((3, 3))
        for g in _sample(g_signals, mid):
            G += h * g.T @ g
        lam2 = float(np.linalg.eigvalsh(G)[::-1][1])
    drift = 0.0
    if b_signals:
        grid = np.linspace(0.0, window_T, n_points)
        w = np.asarray(omega(grid), dtype=float).reshape(grid.size, 3)
        total = np.zeros((grid.size, 3))
        for sig in b_signals:
            b = np.asarray(sig(grid), dtype=float).reshape(grid.size, 3)
            total += np.cross(w, b) + _rate_samples(sig, grid, numeric_derivatives)
        drift = float(np.linalg.norm(_trapezoid_weights(grid) @ total))
    margin = lam2 + drift
    return ConditionReport("trumpf", margin > threshold, margin, threshold, (0.0, float(window_T)),
                           f"lambda2={lam2:.6g}, drift={drift:.6g}")


def check_excitation(phi, times, kind: str = "IE", window_T: float | None = None,
                     threshold: float = 0.0) -> ExcitationReport:
    """Smallest eigenvalue of the windowed Gramian ``int phi phi^T``.

    Parameters
    ----------
    phi : array_like
        ``(N, 3)`` vector samples or ``(N, 3, 3)`` matrix samples.
    times : array_like
        ``(N,)`` sample times covering the horizon.
    kind : {"IE", "PE"}
        ``IE`` integrates over ``[t0, t0 + T]``; ``PE`` takes the minimum over
        all windows ``[s, s + T]`` starting on the grid.
    window_T : float, optional
        Window length; defaults to the full horizon.
    """
    if kind not in ("IE", "PE"):
        raise ValueError(f"kind must be 'IE' or 'PE', got {kind!r}")
    times = np.asarray(times, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[:, :, None]
    if phi.shape[0] != times.size or phi.shape[1] != 3:
        raise ValueError("phi must have shape (N, 3) or (N, 3, k) matching times")
    horizon = float(times[-1] - times[0])
    T = horizon if window_T is None else float(window_T)
    if not T > 0:
        raise ValueError("window_T must be > 0")
    if T > horizon * (1 + 1e-12):
        raise ValueError(f"window_T = {T} s exceeds the sample horizon {horizon} s")
    outer = np.einsum("nik,njk->nij", phi, phi)
    cum = np.zeros_like(outer)
    cum[1:] = np.cumsum(0.5 * (outer[1:] + outer[:-1]) * np.diff(times)[:, None, None], axis=0)
    starts = np.nonzero(times + T <= times[-1] + 1e-9 * max(1.0, T))[0]
    if kind == "IE":
        starts = starts[:1]
    # cumulative Gramian interpolated at the window ends
    flat = cum.reshape(times.size, -1)
    ends = np.stack([np.interp(times[starts] + T, times, flat[:, c]) for c in range(flat.shape[1])], axis=1)
    grams = ends.reshape(-1, *cum.shape[1:]) - cum[starts]
    lmin = np.linalg.eigvalsh(grams)[:, 0]
    k = int(np.argmin(lmin))
    return ExcitationReport(kind, T, max(0.0, float(lmin[k])), threshold, float(times[starts[k]]))


def wahba_solve(batch: RegressorBatch, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Rotation minimising ``sum_i w_i |Y_i - R^T phi_i|^2`` (orthogonal Procrustes).

    Returns ``(R, residual)``. Raises ``ValueError`` when every ``phi`` is
    collinear, which leaves the rotation about that axis undetermined.
    """
    if len(batch) < 2:
        raise ValueError("attitude not determined: need at least two columns")
    w = batch.weights
    gram = (batch.phi * w[:, None]).T @ batch.phi
    ev = np.linalg.eigvalsh(gram)[::-1]
    if ev[1] <= tol * ev[0]:
        raise ValueError("attitude not determined: all reference columns are collinear")
    B = (batch.Y * w[:, None]).T @ batch.phi  # maximise tr(S B^T) with S = R^T
    U, _, Vt = np.linalg.svd(B)
    d = np.sign(np.linalg.det(U @ Vt)) or 1.0
    S = U @ np.diag([1.0, 1.0, d]) @ Vt
    R = S.T
    r = batch.Y - batch.phi @ R
    return R, float(np.sum(w * np.einsum("ij,ij->i", r, r)))
