"""Sensor models and measurement streams.

Vector sensors add isotropic Gaussian noise in R^3 and renormalise onto the
unit sphere. Gyro noise is added to the reported rate only; the truth
integration never sees it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .kinematics import Trajectory

STREAM_KINDS = ("complementary", "compatible", "gyro", "accel", "gps_velocity", "filtered")

DEFAULT_VECTOR_NOISE_STD = 0.01
DEFAULT_GYRO_NOISE_STD = 0.005
DEFAULT_ACCEL_BIAS = (0.05, -0.03, 0.02)


@dataclass(frozen=True)
class SensorConfig:
    """Sensor degradations.

    Sample periods of ``None`` mean "every simulation step".
    """

    vector_noise_std: float = 0.0
    gyro_noise_std: float = 0.0
    accel_bias: tuple = (0.0, 0.0, 0.0)
    delay_tau: float = 0.0
    sample_period_vector: Optional[float] = None
    sample_period_gyro: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.vector_noise_std < 0 or self.gyro_noise_std < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if self.delay_tau < 0:
            raise ValueError("delay_tau must be >= 0")
        for name in ("sample_period_vector", "sample_period_gyro"):
            p = getattr(self, name)
            if p is not None and not p > 0:
                raise ValueError(f"{name} must be > 0")
        bias = tuple(float(b) for b in self.accel_bias)
        if len(bias) != 3 or not np.all(np.isfinite(bias)):
            raise ValueError("accel_bias must be a finite 3-vector")
        object.__setattr__(self, "accel_bias", bias)

    def noiseless(self) -> "SensorConfig":
        return replace(self, vector_noise_std=0.0, gyro_noise_std=0.0, accel_bias=(0.0, 0.0, 0.0))


@dataclass(frozen=True)
class MeasurementStream:
    """Time-stamped samples of one sensor.

    ``hold`` marks streams that are meant to be read with a zero-order hold
    between samples.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str
    hold: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.values.shape[0] != self.times.shape[0]:
            raise ValueError("stream times and values differ in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("stream times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("stream values must be finite")

    def __len__(self) -> int:
        return self.times.shape[0]

    def sample_and_hold(self, grid) -> np.ndarray:
        """Values held from the latest sample at or before each grid time.

        Grid times earlier than the first sample map to index ``-1``; callers
        treat those as warm-up. Returns the index array.
        """
        grid = np.asarray(grid, dtype=float)
        tol = 1e-9 * max(1.0, float(np.max(np.abs(grid))) if grid.size else 1.0)
        return np.searchsorted(self.times, grid + tol, side="right") - 1


def _noisy_unit(v: np.ndarray, std: float, rng: Optional[np.random.Generator]) -> np.ndarray:
    if std > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise std > 0")
        v = v + std * rng.standard_normal(v.shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def measure_complementary(R, g, cfg: SensorConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Body-frame reading of an inertial direction: ``normalize(R^T g + n)``.

    Works on single samples (``R`` 3x3, ``g`` 3-vector) or batches
    (``(N, 3, 3)`` and ``(N, 3)``).
    """
    R = np.asarray(R, dtype=float)
    g = np.asarray(g, dtype=float)
    y = np.einsum("...ji,...j->...i", R, g)
    return _noisy_unit(y, cfg.vector_noise_std, rng)


def measure_compatible(R, b, cfg: SensorConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Inertial-frame reading of a body direction: ``normalize(R b + n)``."""
    R = np.asarray(R, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.einsum("...ij,...j->...i", R, b)
    return _noisy_unit(y, cfg.vector_noise_std, rng)


def gyro_stream(traj: Trajectory, cfg: SensorConfig, rng: Optional[np.random.Generator] = None) -> MeasurementStream:
    """Interval rates of ``traj`` plus white noise, one sample per grid step."""
    w = traj.omegas.copy()
    if cfg.gyro_noise_std > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise std > 0")
        w = w + cfg.gyro_noise_std * rng.standard_normal(w.shape)
    return MeasurementStream(traj.times.copy(), w, "gyro")


def vector_stream(traj: Trajectory, ref, cfg: SensorConfig, kind: str,
                  rng: Optional[np.random.Generator] = None) -> MeasurementStream:
    """Sample a complementary or compatible sensor on the trajectory grid."""
    r = np.asarray(ref(traj.times), dtype=float)
    if kind == "complementary":
        y = measure_complementary(traj.rotations, r, cfg, rng)
    elif kind == "compatible":
        y = measure_compatible(traj.rotations, r, cfg, rng)
    else:
        raise ValueError(f"not a vector sensor kind: {kind!r}")
    return MeasurementStream(traj.times.copy(), y, kind)


def degrade_stream(stream: MeasurementStream, cfg: SensorConfig) -> MeasurementStream:
    """Delay a stream by ``cfg.delay_tau`` and resample it at the sensor period.

    Samples are taken (zero-order hold) at ``t0 + j * period`` and
    re-stamped ``tau`` later; samples that would arrive after the end of the
    input are dropped. The gyro period applies to ``gyro`` streams and the
    vector period to everything else.
    """
    tau = cfg.delay_tau
    period = cfg.sample_period_gyro if stream.kind == "gyro" else cfg.sample_period_vector
    times = stream.times
    if times.size == 0:
        raise ValueError("empty stream")
    t0, t_end = float(times[0]), float(times[-1])
    if tau > t_end - t0:
        raise ValueError(f"empty stream: delay {tau} s exceeds the stream horizon {t_end - t0} s")
    if times.size > 1:
        dt_in = float(np.min(np.diff(times)))
        if period is not None and period < dt_in * (1 - 1e-9):
            raise ValueError(f"sample period {period} s is shorter than the input spacing {dt_in} s")
    if period is None:
        idx = np.arange(times.size)
    else:
        n = int(np.floor((t_end - t0) / period + 1e-9))
        targets = t0 + period * np.arange(n + 1)
        idx = np.searchsorted(times, targets + 1e-9 * max(1.0, abs(t_end)), side="right") - 1
        idx = np.unique(idx)
    out_t = times[idx] + tau
    keep = out_t <= t_end + 1e-9 * max(1.0, abs(t_end))
    idx, out_t = idx[keep], out_t[keep]
    if idx.size == 0:
        raise ValueError("empty stream after degradation")
    meta = dict(stream.meta, delay_tau=tau, sample_period=period, source_index=idx)
    return MeasurementStream(out_t, stream.values[idx].copy(), stream.kind, True, meta)


def write_stream_csv(stream: MeasurementStream, path) -> Path:
    """Write ``t,<kind>,v1,v2,v3`` rows with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "kind", "v1", "v2", "v3"])
        for t, v in zip(stream.times, stream.values):
            w.writerow([f"{t:.17g}", stream.kind] + [f"{x:.17g}" for x in v])
    return path


def read_stream_csv(path) -> MeasurementStream:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no samples")
    kind = rows[0]["kind"]
    t = np.array([float(r["t"]) for r in rows])
    v = np.array([[float(r["v1"]), float(r["v2"]), float(r["v3"])] for r in rows])
    return MeasurementStream(t, v, kind)
