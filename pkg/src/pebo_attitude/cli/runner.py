"""Scenario execution: truth, sensors, observers, trace and summary."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .. import observability, so3
from ..observers import Observer1, Observer2, VIRTUAL_ROTATION, run_pairs
from ..sim.kinematics import NumericalError, integrate_attitude, integrate_rates
from ..sim.sensors import degrade_stream, gyro_stream, vector_stream
from .config import ConfigError, ObserverSpec, ScenarioConfig

OUTPUT_DIR_ENV = "PEBO_OUTPUT_DIR"
THREE_MOMENT_POINTS = 200


def output_dir(override=None) -> Path:
    """``override``, else ``$PEBO_OUTPUT_DIR``, else the working directory."""
    path = Path(override if override is not None else os.environ.get(OUTPUT_DIR_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def trace_header(names) -> list[str]:
    cols = ["t", "yaw_true", "pitch_true", "roll_true"]
    for n in names:
        cols += [f"{n}_yaw", f"{n}_pitch", f"{n}_roll", f"{n}_dist", f"{n}_V"]
    return cols


def dist_batch(R_hat: np.ndarray, R: np.ndarray) -> np.ndarray:
    """``dist_to_identity(R_hat^T R)`` for stacks of rotations."""
    tr = np.einsum("nij,nij->n", R_hat, R)
    return np.sqrt(np.clip((3.0 - tr) / 4.0, 0.0, 1.0))


def lyapunov_batch(Qc_hat: np.ndarray, Qc: np.ndarray) -> np.ndarray:
    return 3.0 - np.einsum("nij,nij->n", Qc_hat, Qc)


def orthogonality_batch(X: np.ndarray) -> np.ndarray:
    E = np.einsum("nki,nkj->nij", X, X) - np.eye(3)
    return np.sqrt(np.einsum("nij,nij->n", E, E))


@dataclass
class Pairs:
    """Observer inputs ``(y_c, b_c)`` on the simulation grid; ``valid`` is False during warm-up."""

    y_c: np.ndarray
    b_c: np.ndarray
    valid: np.ndarray


@dataclass
class Simulation:
    times: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    pairs: dict
    dt: float


@dataclass
class RunResult:
    trace_path: Optional[Path]
    summary_path: Optional[Path]
    summary: dict
    simulation: Simulation = field(repr=False)
    estimates: dict = field(repr=False, default_factory=dict)


def simulate(config: ScenarioConfig) -> Simulation:
    """Truth, gyro-driven extension ``Q`` and held observer pairs for every reference.

    The RNG is seeded from ``[run] seed``; gyro noise is drawn first, then
    each reference in file order.
    """
    run, cfg = config.run, config.sensors
    rng = np.random.default_rng(run.seed)
    traj = integrate_attitude(config.truth.R0, config.truth.omega_signal(), run.dt, run.horizon)
    t, n = traj.times, len(traj)

    gyro = gyro_stream(traj, cfg, rng)
    if cfg.sample_period_gyro is not None:
        gyro = degrade_stream(gyro, replace(cfg, delay_tau=0.0))
    Q = integrate_rates(np.eye(3), gyro.values[gyro.sample_and_hold(t)], run.dt)

    pairs = {}
    for ref in config.references:
        sig = ref.signal()
        stream = vector_stream(traj, sig, cfg, ref.sensor, rng)
        if cfg.delay_tau > 0 or cfg.sample_period_vector is not None:
            try:
                stream = degrade_stream(stream, cfg)
            except ValueError as exc:
                raise ConfigError(f"[sensors] delay_tau: {exc}") from None
        src = stream.meta.get("source_index", np.arange(n))
        h = stream.sample_and_hold(t)
        valid = h >= 0
        h = np.maximum(h, 0)
        k_src = np.where(valid, src[h], 0)
        y = stream.values[h]
        r = np.asarray(sig(t), dtype=float)[k_src]
        if ref.sensor == "complementary":
            y_c, b_c = np.einsum("nij,nj->ni", Q[k_src], y), r
        else:
            y_c, b_c = y, np.einsum("nij,nj->ni", Q[k_src], r)
        pairs[ref.name] = Pairs(y_c, b_c, valid)
    return Simulation(t, traj.rotations, Q, pairs, run.dt)


def build_observer(spec: ObserverSpec):
    gains = spec.gains()
    if spec.type == "obs2":
        return Observer2(gains, spec.Qc_hat0)
    if spec.type == "baseline":
        return Observer1(gains, spec.Qc_hat0)
    return Observer1(gains, spec.Qc_hat0, spec.params["mode"], spec.params.get("delta", 0.1))


def evaluate_conditions(config: ScenarioConfig) -> dict:
    """Condition verdicts over the configured horizon (empty for a zero horizon)."""
    run = config.run
    if run.horizon <= 0:
        return {"conditions": [], "excitation": []}
    omega = config.truth.omega_signal()
    g = [r.signal() for r in config.references if r.sensor == "complementary"]
    b = [r.signal() for r in config.references if r.sensor == "compatible"]
    grid = observability.default_grid(run.horizon, run.dt)
    reports = [observability.check_distinguishability(g, b, omega, config.truth.R0, grid)]
    if b:
        reports.append(observability.check_distinguishability_modified(g, b, omega, grid))
    T = next((o.params["T"] for o in config.observers if o.type == "obs1"), run.horizon)
    T = min(T, run.horizon)
    reports.append(observability.check_trumpf(g, b, omega, T))
    coarse = np.linspace(0.0, run.horizon, THREE_MOMENT_POINTS)
    for sig in g:
        reports.append(observability.check_three_moment(sig, coarse))
    excitation = []
    for ref in config.references:
        rep = observability.check_excitation(ref.signal()(grid), grid, "PE", T)
        excitation.append({"reference": ref.name, "kind": rep.kind, "window_T": rep.window_T,
                           "delta": rep.delta, "excited": rep.excited, "window_start": rep.window_start})
    return {"conditions": [r.as_dict() for r in reports], "excitation": excitation}


def write_trace(path: Path, header: list[str], table: np.ndarray) -> Path:
    with Path(path).open("w") as fh:
        np.savetxt(fh, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return Path(path)


def _output_rows(n: int, every: int) -> np.ndarray:
    rows = np.arange(0, n, every)
    return rows if rows[-1] == n - 1 else np.append(rows, n - 1)


def run_scenario(config: ScenarioConfig, out_dir=None, write: bool = True,
                 conditions: bool = True) -> RunResult:
    """Simulate ``config`` and write ``<output>.csv`` and ``<output>_summary.json``.

    Observers advance at ``[run] dt`` with zero-order-held measurements.
    Reruns with the same config are byte-identical.
    """
    sim = simulate(config)
    Qc_true = np.einsum("nij,nkj->nik", sim.Q, sim.R)
    rows = _output_rows(sim.times.size, config.run.output_every)
    columns = [sim.times[rows], *so3.euler_zyx_batch(sim.R[rows]).T]
    orth = {"Q": float(orthogonality_batch(sim.Q).max())}
    per_obs = {}
    estimates = {}
    for spec in config.observers:
        p = sim.pairs[spec.reference]
        Qc_hat = run_pairs(build_observer(spec), p.y_c, p.b_c, sim.dt, p.valid)
        if not np.all(np.isfinite(Qc_hat)):
            raise NumericalError(f"observer {spec.name} produced non-finite values")
        R_hat = np.einsum("nji,njk->nik", Qc_hat, sim.Q)
        dist = dist_batch(R_hat, sim.R)
        V = lyapunov_batch(Qc_hat, Qc_true)
        euler = so3.euler_zyx_batch(R_hat)
        err = so3.wrap_angle(euler - so3.euler_zyx_batch(sim.R))
        columns += [*euler[rows].T, dist[rows], V[rows]]
        estimates[spec.name] = Qc_hat
        entry = {
            "type": spec.type,
            "terminal_dist": float(dist[-1]),
            "terminal_euler_error": [float(x) for x in err[-1]],
            "V_min": float(V.min()),
            "V_max": float(V.max()),
            "max_orthogonality_error": max(float(orthogonality_batch(Qc_hat).max()),
                                           float(orthogonality_batch(R_hat).max())),
        }
        if spec.type == "obs2":
            bv = p.b_c @ VIRTUAL_ROTATION.T
            m = np.linalg.norm(np.cross(p.b_c, bv), axis=1) / np.linalg.norm(p.b_c, axis=1)
            entry["min_virtual_margin"] = float(m[p.valid].min()) if p.valid.any() else None
        per_obs[spec.name] = entry
        orth[spec.name] = entry["max_orthogonality_error"]

    summary = {
        "scenario": config.run.output,
        "dt": config.run.dt,
        "horizon": float(sim.times[-1]),
        "seed": config.run.seed,
        "steps": int(sim.times.size - 1),
        "observers": per_obs,
        "max_orthogonality_error": orth,
    }
    if conditions:
        summary.update(evaluate_conditions(config))

    trace_path = summary_path = None
    if write:
        d = output_dir(out_dir)
        trace_path = write_trace(d / f"{config.run.output}.csv", trace_header([o.name for o in config.observers]),
                                 np.column_stack(columns))
        summary_path = d / f"{config.run.output}_summary.json"
        summary["trace"] = trace_path.name
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunResult(trace_path, summary_path, summary, sim, estimates)
