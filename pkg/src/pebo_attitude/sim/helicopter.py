"""Helicopter flight scenario with GPS-derived acceleration references.

The path is a climbing/descending flight at constant horizontal speed whose
heading rate follows a schedule of segments (straight, coordinated turn,
...) joined by raised-cosine transitions, so velocity and acceleration have
closed forms. The body z-axis is aligned with the specific force and the body
x-axis with the velocity heading.

Frames: inertial ENU-like with ``z`` up, gravity ``(0, 0, -9.81)``.
The accelerometer measures specific force ``R^T (a - gravity)``.

Filters (``p = d/dt``)::

    H1 = alpha p / (alpha + p)    dirty derivative of GPS velocity
    H2 = alpha / (alpha + p)      low-pass applied to Q * accelerometer

Both are discretised exactly under a zero-order hold at the rate of the
stream they filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinematics import Trajectory, integrate_attitude, integrate_rates
from .sensors import MeasurementStream, SensorConfig
from .signals import OmegaSignal

GRAVITY = np.array([0.0, 0.0, -9.81])

INERTIAL_RATE_HZ = 100.0
GPS_RATE_HZ = 10.0
OBSERVER_RATE_HZ = 1000.0


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * u))


def _smoothstep_integral(u):
    uc = np.clip(u, 0.0, 1.0)
    inner = 0.5 * (uc - np.sin(np.pi * uc) / np.pi)
    return np.where(u >= 1.0, u - 0.5, inner)


def _smoothstep_rate(u):
    inside = (u > 0.0) & (u < 1.0)
    return np.where(inside, 0.5 * np.pi * np.sin(np.pi * np.clip(u, 0.0, 1.0)), 0.0)


@dataclass(frozen=True)
class FlightPath:
    """Kinematic helicopter path.

    ``segments`` holds ``(duration [s], turn rate [rad/s])`` pairs; the turn
    rate changes over ``ramp`` seconds starting at each segment boundary.
    The vertical speed is ``climb_rate * sin(2 pi t / climb_period)``.
    """

    speed: float = 12.0
    heading0: float = 1.0
    segments: tuple = ((10.0, 0.0), (30.0, 0.4), (15.0, 0.0), (30.0, -0.4), (15.0, 0.0))
    ramp: float = 2.0
    climb_rate: float = 1.0
    climb_period: float = 50.0

    @property
    def duration(self) -> float:
        return float(sum(d for d, _ in self.segments))

    @property
    def boundaries(self) -> np.ndarray:
        return np.cumsum([0.0] + [d for d, _ in self.segments])

    def turn_windows(self, settle: float = 0.0) -> list[tuple[float, float]]:
        """``[start + ramp + settle, end)`` of every segment with a non-zero turn rate."""
        out = []
        b = self.boundaries
        for i, (_, rate) in enumerate(self.segments):
            if rate != 0.0:
                out.append((float(b[i] + self.ramp + settle), float(b[i + 1])))
        return out

    def _rate_steps(self):
        rates = [r for _, r in self.segments]
        b = self.boundaries
        return rates[0], [(b[i], rates[i] - rates[i - 1]) for i in range(1, len(rates))]

    def heading(self, t):
        t = np.asarray(t, dtype=float)
        r0, steps = self._rate_steps()
        psi = self.heading0 + r0 * t
        for tb, dr in steps:
            psi = psi + dr * self.ramp * _smoothstep_integral((t - tb) / self.ramp)
        return psi

    def heading_rate(self, t):
        t = np.asarray(t, dtype=float)
        r0, steps = self._rate_steps()
        r = np.full_like(t, r0)
        for tb, dr in steps:
            r = r + dr * _smoothstep((t - tb) / self.ramp)
        return r

    def heading_accel(self, t):
        t = np.asarray(t, dtype=float)
        _, steps = self._rate_steps()
        out = np.zeros_like(t)
        for tb, dr in steps:
            out = out + dr * _smoothstep_rate((t - tb) / self.ramp) / self.ramp
        return out

    def velocity(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        psi = self.heading(t)
        k = 2.0 * np.pi / self.climb_period
        return np.stack(
            [self.speed * np.cos(psi), self.speed * np.sin(psi), self.climb_rate * np.sin(k * t)], axis=1
        )

    def acceleration(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        psi = self.heading(t)
        r = self.heading_rate(t)
        k = 2.0 * np.pi / self.climb_period
        return np.stack(
            [
                -self.speed * np.sin(psi) * r,
                self.speed * np.cos(psi) * r,
                self.climb_rate * k * np.cos(k * t),
            ],
            axis=1,
        )

    def attitude(self, t) -> np.ndarray:
        """Body-to-inertial rotations ``(N, 3, 3)`` along the path."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        f = self.acceleration(t) - GRAVITY
        b3 = f / np.linalg.norm(f, axis=1, keepdims=True)
        psi = self.heading(t)
        xc = np.stack([np.cos(psi), np.sin(psi), np.zeros_like(psi)], axis=1)
        b2 = np.cross(b3, xc)
        b2 /= np.linalg.norm(b2, axis=1, keepdims=True)
        b1 = np.cross(b2, b3)
        return np.stack([b1, b2, b3], axis=2)

    def body_rate(self, t, h: float = 1e-5) -> np.ndarray:
        """``vex(R^T dR/dt)`` with a central difference of the closed-form attitude."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        R = self.attitude(t)
        dR = (self.attitude(t + h) - self.attitude(t - h)) / (2.0 * h)
        W = np.einsum("nji,njk->nik", R, dR)
        W = 0.5 * (W - np.transpose(W, (0, 2, 1)))
        return np.stack([W[:, 2, 1], W[:, 0, 2], W[:, 1, 0]], axis=1)


def lowpass(values, dt: float, alpha: float, x0=None) -> np.ndarray:
    """Samples of ``x' = alpha (u - x)`` for ``u`` linear between samples.

    Exact first-order-hold discretization: ``x_k`` uses inputs up to and
    including ``u_k``; ``x_0`` is ``x0`` (zero by default). A zero-order hold
    would lag the input by half a sample, which at 10 Hz inflates the
    dirty-derivative gain by about ``alpha * dt / 2``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    u = np.asarray(values, dtype=float)
    a = math.exp(-alpha * dt)
    c_prev = 1.0 - a
    c_ramp = 1.0 + math.expm1(-alpha * dt) / (alpha * dt)  # 1 - (1 - a) / (alpha dt)
    out = np.empty_like(u)
    x = np.zeros(u.shape[1:]) if x0 is None else np.array(x0, dtype=float)
    out[0] = x
    for k in range(1, u.shape[0]):
        x = a * x + c_prev * u[k - 1] + c_ramp * (u[k] - u[k - 1])
        out[k] = x
    return out


def dirty_derivative(stream: MeasurementStream, alpha: float) -> MeasurementStream:
    """``H1 = alpha p / (alpha + p)`` applied to a uniformly sampled stream.

    The internal low-pass state starts at the first sample, so the derivative
    estimate starts at zero.
    """
    dt = float(np.mean(np.diff(stream.times)))
    v = stream.values
    x = lowpass(v, dt, alpha, x0=v[0])
    out = alpha * (v - x)
    return MeasurementStream(stream.times.copy(), out, "filtered", True, {"filter": "H1", "alpha": alpha})


@dataclass
class HelicopterData:
    """Output of :func:`helicopter_scenario`.

    ``h2_gravity`` is ``H2[-gravity]`` on the 100 Hz grid with zero initial
    state, the same filter that produced ``h2_q_accel``.
    """

    trajectory: Trajectory
    path: FlightPath
    alpha: float
    gyro: MeasurementStream
    accel: MeasurementStream
    gps: MeasurementStream
    inertial_accel: np.ndarray
    body_accel: np.ndarray
    h1_velocity: MeasurementStream
    h2_q_accel: MeasurementStream
    h2_gravity: np.ndarray
    pebo_q: np.ndarray
    extras: dict = field(default_factory=dict)

    def reference(self, h1: Optional[MeasurementStream] = None, filtered_gravity: bool = True) -> np.ndarray:
        """Inertial specific-force reference on the 100 Hz grid.

        ``H1[v]`` (held from 10 Hz) plus ``H2[-gravity]``, the counterpart of
        ``h2_q_accel``. With ``filtered_gravity=False`` the raw ``-gravity``
        is added instead, which pairs with the unfiltered accelerometer.
        Pass another ``H1`` stream to use a different ``alpha``.
        """
        h1 = h1 or self.h1_velocity
        idx = h1.sample_and_hold(self.accel.times)
        grav = self.h2_gravity if filtered_gravity else -GRAVITY
        return h1.values[idx] + grav


def helicopter_scenario(
    cfg: SensorConfig,
    alpha: float,
    path: Optional[FlightPath] = None,
    accel_noise_std: float = 0.05,
    gps_noise_std: float = 0.05,
    dt: float = 1.0 / OBSERVER_RATE_HZ,
) -> HelicopterData:
    """Simulate the helicopter flight and its sensors.

    Truth is integrated at ``dt`` (1 kHz by default). Gyro and accelerometer
    are sampled at 100 Hz, GPS velocity at 10 Hz. ``cfg`` supplies the gyro
    noise, the accelerometer bias and the RNG seed; ``vector_noise_std`` is
    not used here (the accelerometer has its own ``accel_noise_std`` in
    m/s^2).

    The dynamic extension ``Q`` is integrated at ``dt`` from the held 100 Hz
    gyro samples, starting at the identity, and ``H2[Q * accel]`` is formed
    at 100 Hz.
    """
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    path = path or FlightPath()
    rng = np.random.default_rng(cfg.seed)
    horizon = path.duration
    step_in = int(round((1.0 / INERTIAL_RATE_HZ) / dt))
    step_gps = int(round((1.0 / GPS_RATE_HZ) / dt))

    half = 0.5 * dt
    tab_t = np.arange(int(round(horizon / half)) + 3) * half
    omega = OmegaSignal.tabulated(tab_t, path.body_rate(tab_t))
    traj = integrate_attitude(path.attitude(0.0)[0], omega, dt, horizon)
    t = traj.times

    idx_in = np.arange(0, t.size, step_in)
    t_in = t[idx_in]
    R_in = traj.rotations[idx_in]

    # gyro: rate at the middle of each 10 ms hold interval
    w = path.body_rate(t_in + 0.5 * step_in * dt)
    if cfg.gyro_noise_std > 0:
        w = w + cfg.gyro_noise_std * rng.standard_normal(w.shape)
    gyro = MeasurementStream(t_in, w, "gyro")

    a_in = path.acceleration(t_in)
    body_accel = np.einsum("nji,nj->ni", R_in, a_in)
    f_body = np.einsum("nji,nj->ni", R_in, a_in - GRAVITY)
    f_meas = f_body + np.asarray(cfg.accel_bias)
    if accel_noise_std > 0:
        f_meas = f_meas + accel_noise_std * rng.standard_normal(f_meas.shape)
    accel = MeasurementStream(t_in, f_meas, "accel")

    idx_gps = np.arange(0, t.size, step_gps)
    t_gps = t[idx_gps]
    v = path.velocity(t_gps)
    if gps_noise_std > 0:
        v = v + gps_noise_std * rng.standard_normal(v.shape)
    gps = MeasurementStream(t_gps, v, "gps_velocity")
    h1 = dirty_derivative(gps, alpha)

    held = np.repeat(w, step_in, axis=0)[: t.size]
    Q = integrate_rates(np.eye(3), held, dt)

    dt_in = step_in * dt
    qa = np.einsum("nij,nj->ni", Q[idx_in], f_meas)
    h2 = lowpass(qa, dt_in, alpha)
    h2_g = lowpass(np.tile(-GRAVITY, (t_in.size, 1)), dt_in, alpha)

    return HelicopterData(
        trajectory=traj,
        path=path,
        alpha=alpha,
        gyro=gyro,
        accel=accel,
        gps=gps,
        inertial_accel=a_in,
        body_accel=body_accel,
        h1_velocity=h1,
        h2_q_accel=MeasurementStream(t_in, h2, "filtered", True, {"filter": "H2", "alpha": alpha}),
        h2_gravity=h2_g,
        pebo_q=Q,
        extras={"specific_force_body": f_body},
    )


def steady_circle_h1_amplitude(accel_magnitude: float, alpha: float, turn_rate: float) -> float:
    """Steady-state ``|H1[v]|`` on a circle: ``|a| alpha / sqrt(alpha^2 + Omega^2)``."""
    return accel_magnitude * alpha / math.hypot(alpha, turn_rate)


__all__ = [
    "FlightPath",
    "GRAVITY",
    "HelicopterData",
    "dirty_derivative",
    "helicopter_scenario",
    "lowpass",
    "steady_circle_h1_amplitude",
]
