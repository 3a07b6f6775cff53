"""Scenario configuration as a sectioned INI file.

Example::

    [truth]
    R0 = -1 0 0; 0 -1 0; 0 0 1
    omega_kind = constant
    omega = 0.23 -0.5 0.15

    [reference.g]
    sensor = complementary
    kind = piecewise
    switch_times = 5
    values = 1 0 0; 0 0 1

    [sensors]
    vector_noise_std = 0.0
    gyro_noise_std = 0.0

    [observer.obs1]
    type = obs1
    gamma_P = 3
    gamma_I = 1
    T = 10

    [run]
    dt = 0.001
    horizon = 60
    seed = 0
    output = example1

Vectors are whitespace separated, matrix rows are separated by ``;``.
:meth:`ScenarioConfig.to_ini` writes a canonical form, so emit, parse and
emit again gives the same text.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .. import so3
from ..observers import Observer1Gains, Observer2Gains
from ..sim.sensors import DEFAULT_GYRO_NOISE_STD, DEFAULT_VECTOR_NOISE_STD, SensorConfig
from ..sim.signals import EXAMPLE1_OMEGA, EXAMPLE1_R0, OmegaSignal, ReferenceSignal

OMEGA_KINDS = ("constant", "sinusoidal", "piecewise")
REFERENCE_KINDS = ("constant", "piecewise", "cone")
SENSOR_TYPES = ("complementary", "compatible")
OBSERVER_TYPES = ("obs1", "obs2", "baseline")
_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9]*$")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in np.ravel(v))


def _fmt_rows(m) -> str:
    return "; ".join(_fmt_vec(row) for row in np.atleast_2d(m))


class _Section:
    """Typed accessors over one INI section that report ``[section] key`` on failure."""

    def __init__(self, name: str, data):
        self.name = name
        self.data = dict(data)
        self.used: set[str] = set()

    def error(self, key: str, msg: str) -> ConfigError:
        return ConfigError(f"[{self.name}] {key}: {msg}")

    def has(self, key: str) -> bool:
        return key in self.data and self.data[key].strip() != ""

    def raw(self, key: str, default=None) -> Optional[str]:
        self.used.add(key)
        if not self.has(key):
            if default is None:
                raise self.error(key, "missing required value")
            return default
        return self.data[key].strip()

    def float(self, key: str, default=None, *, positive=False, nonneg=False) -> float:
        text = self.raw(key, None if default is None else repr(default))
        try:
            x = float(text)
        except ValueError:
            raise self.error(key, f"not a number: {text!r}") from None
        if not math.isfinite(x):
            raise self.error(key, "must be finite")
        if positive and not x > 0:
            raise self.error(key, f"must be > 0, got {x}")
        if nonneg and x < 0:
            raise self.error(key, f"must be >= 0, got {x}")
        return x

    def optional_float(self, key: str, *, positive=False) -> Optional[float]:
        self.used.add(key)
        if not self.has(key):
            return None
        return self.float(key, positive=positive)

    def int(self, key: str, default=None, *, minimum=None) -> int:
        text = self.raw(key, None if default is None else str(default))
        try:
            x = int(text)
        except ValueError:
            raise self.error(key, f"not an integer: {text!r}") from None
        if minimum is not None and x < minimum:
            raise self.error(key, f"must be >= {minimum}, got {x}")
        return x

    def choice(self, key: str, options, default=None) -> str:
        text = self.raw(key, default)
        if text not in options:
            raise self.error(key, f"must be one of {', '.join(options)}, got {text!r}")
        return text

    def vector(self, key: str, n: int = 3, default=None) -> np.ndarray:
        text = self.raw(key, None if default is None else _fmt_vec(default))
        try:
            v = np.array([float(x) for x in text.split()])
        except ValueError:
            raise self.error(key, f"not a list of numbers: {text!r}") from None
        if v.size != n:
            raise self.error(key, f"expected {n} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise self.error(key, "values must be finite")
        return v

    def floats(self, key: str) -> np.ndarray:
        text = self.raw(key)
        try:
            return np.array([float(x) for x in text.split()])
        except ValueError:
            raise self.error(key, f"not a list of numbers: {text!r}") from None

    def rows(self, key: str, width: int = 3) -> np.ndarray:
        text = self.raw(key)
        try:
            rows = [[float(x) for x in r.split()] for r in text.split(";") if r.strip()]
        except ValueError:
            raise self.error(key, f"not a matrix: {text!r}") from None
        if not rows or any(len(r) != width for r in rows):
            raise self.error(key, f"every row needs {width} values")
        m = np.array(rows)
        if not np.all(np.isfinite(m)):
            raise self.error(key, "values must be finite")
        return m

    def check_unused(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise self.error(extra[0], "unknown key")


@dataclass(frozen=True)
class TruthSpec:
    R0: np.ndarray
    omega_kind: str
    omega_params: dict
    euler: Optional[tuple] = None

    def omega_signal(self) -> OmegaSignal:
        p = self.omega_params
        if self.omega_kind == "constant":
            return OmegaSignal.constant(p["omega"])
        if self.omega_kind == "sinusoidal":
            return OmegaSignal.sinusoidal(p["amplitude"], p["frequency"], p["phase"], p["offset"])
        return OmegaSignal.piecewise(p["switch_times"], p["values"])


@dataclass(frozen=True)
class ReferenceSpec:
    name: str
    sensor: str
    kind: str
    params: dict

    def signal(self) -> ReferenceSignal:
        p = self.params
        if self.kind == "constant":
            return ReferenceSignal.constant(p["vector"])
        if self.kind == "piecewise":
            return ReferenceSignal.piecewise_constant(p["switch_times"], p["values"])
        return ReferenceSignal.cone(p["half_angle"], p["rate"], p["phase"])


@dataclass(frozen=True)
class ObserverSpec:
    name: str
    type: str
    params: dict
    reference: str
    Qc_hat0: Optional[np.ndarray] = None

    def gains(self):
        p = self.params
        if self.type == "obs2":
            return Observer2Gains(p["gamma_z"], p["gamma"], p["gamma_c"], p["gamma_v"])
        if self.type == "baseline":
            return Observer1Gains(p["gamma_P"], 0.0, 1.0)
        return Observer1Gains(p["gamma_P"], p["gamma_I"], p["T"])


@dataclass(frozen=True)
class RunSpec:
    dt: float = 1e-3
    horizon: float = 60.0
    seed: int = 0
    output: str = "scenario"
    output_every: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    truth: TruthSpec
    references: tuple
    sensors: SensorConfig
    observers: tuple
    run: RunSpec = field(default_factory=RunSpec)

    def reference(self, name: str) -> ReferenceSpec:
        for r in self.references:
            if r.name == name:
                return r
        raise KeyError(name)

    # parsing

    @classmethod
    def from_ini(cls, text: str) -> "ScenarioConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        for name in cp.sections():
            if name not in ("truth", "sensors", "run") and not name.startswith(("reference.", "observer.")):
                raise ConfigError(f"[{name}]: unknown section")
        for required in ("truth", "run"):
            if not cp.has_section(required):
                raise ConfigError(f"[{required}]: missing section")

        truth = _parse_truth(_Section("truth", cp["truth"]))
        refs = tuple(_parse_reference(s[len("reference."):], _Section(s, cp[s]))
                     for s in cp.sections() if s.startswith("reference."))
        if not refs:
            raise ConfigError("[reference.*]: at least one reference section is required")
        names = [r.name for r in refs]
        run = _parse_run(_Section("run", cp["run"]))
        sensors = _parse_sensors(_Section("sensors", cp["sensors"] if cp.has_section("sensors") else {}), run.seed)
        obs = tuple(_parse_observer(s[len("observer."):], _Section(s, cp[s]), names)
                    for s in cp.sections() if s.startswith("observer."))
        return cls(truth, refs, sensors, obs, run)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        return cls.from_ini(text)

    # emission

    def to_ini(self) -> str:
        out = ["[truth]"]
        t = self.truth
        if t.euler is not None:
            out.append(f"euler = {_fmt_vec(t.euler)}")
        else:
            out.append(f"R0 = {_fmt_rows(t.R0)}")
        out.append(f"omega_kind = {t.omega_kind}")
        p = t.omega_params
        if t.omega_kind == "constant":
            out.append(f"omega = {_fmt_vec(p['omega'])}")
        elif t.omega_kind == "sinusoidal":
            for k in ("amplitude", "frequency", "phase", "offset"):
                out.append(f"omega_{k} = {_fmt_vec(p[k])}")
        else:
            out.append(f"omega_switch_times = {_fmt_vec(p['switch_times'])}")
            out.append(f"omega_values = {_fmt_rows(p['values'])}")
        for r in self.references:
            out += ["", f"[reference.{r.name}]", f"sensor = {r.sensor}", f"kind = {r.kind}"]
            if r.kind == "constant":
                out.append(f"vector = {_fmt_vec(r.params['vector'])}")
            elif r.kind == "piecewise":
                out.append(f"switch_times = {_fmt_vec(r.params['switch_times'])}")
                out.append(f"values = {_fmt_rows(r.params['values'])}")
            else:
                for k in ("half_angle", "rate", "phase"):
                    out.append(f"{k} = {_fmt(r.params[k])}")
        s = self.sensors
        out += ["", "[sensors]",
                f"vector_noise_std = {_fmt(s.vector_noise_std)}",
                f"gyro_noise_std = {_fmt(s.gyro_noise_std)}",
                f"delay_tau = {_fmt(s.delay_tau)}",
                f"sample_period_vector = {'' if s.sample_period_vector is None else _fmt(s.sample_period_vector)}",
                f"sample_period_gyro = {'' if s.sample_period_gyro is None else _fmt(s.sample_period_gyro)}"]
        for o in self.observers:
            out += ["", f"[observer.{o.name}]", f"type = {o.type}", f"reference = {o.reference}"]
            for k, v in o.params.items():
                out.append(f"{k} = {v if isinstance(v, str) else _fmt(v)}")
            if o.Qc_hat0 is not None:
                out.append(f"Qc_hat0 = {_fmt_rows(o.Qc_hat0)}")
        r = self.run
        out += ["", "[run]", f"dt = {_fmt(r.dt)}", f"horizon = {_fmt(r.horizon)}", f"seed = {r.seed}",
                f"output = {r.output}", f"output_every = {r.output_every}"]
        return "\n".join(out) + "\n"

    def dump(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_ini())
        return path


def _parse_truth(sec: _Section) -> TruthSpec:
    euler = None
    if sec.has("euler") and sec.has("R0"):
        raise sec.error("R0", "give either R0 or euler, not both")
    if sec.has("euler"):
        euler = tuple(float(x) for x in sec.vector("euler"))
        R0 = so3.rotation_from_euler(*euler)
    else:
        rows = sec.rows("R0")
        try:
            R0 = so3.as_rotation(rows)
        except ValueError as exc:
            raise sec.error("R0", str(exc)) from None
    kind = sec.choice("omega_kind", OMEGA_KINDS, "constant")
    if kind == "constant":
        params = {"omega": sec.vector("omega")}
    elif kind == "sinusoidal":
        params = {
            "amplitude": sec.vector("omega_amplitude"),
            "frequency": sec.vector("omega_frequency"),
            "phase": sec.vector("omega_phase", default=np.zeros(3)),
            "offset": sec.vector("omega_offset", default=np.zeros(3)),
        }
    else:
        times = sec.floats("omega_switch_times")
        values = sec.rows("omega_values")
        if values.shape[0] != times.size + 1:
            raise sec.error("omega_values", f"need {times.size + 1} rows for {times.size} switch times")
        if np.any(np.diff(times) <= 0):
            raise sec.error("omega_switch_times", "must be strictly increasing")
        params = {"switch_times": times, "values": values}
    sec.check_unused()
    return TruthSpec(R0, kind, params, euler)


def _parse_reference(name: str, sec: _Section) -> ReferenceSpec:
    if not _NAME.match(name):
        raise ConfigError(f"[{sec.name}]: reference names must be alphanumeric")
    sensor = sec.choice("sensor", SENSOR_TYPES, "complementary")
    kind = sec.choice("kind", REFERENCE_KINDS)
    if kind == "constant":
        v = sec.vector("vector")
        if not np.linalg.norm(v) > 0:
            raise sec.error("vector", "must be non-zero")
        params = {"vector": v}
    elif kind == "piecewise":
        times = sec.floats("switch_times")
        values = sec.rows("values")
        if values.shape[0] != times.size + 1:
            raise sec.error("values", f"need {times.size + 1} rows for {times.size} switch times")
        if np.any(np.diff(times) <= 0):
            raise sec.error("switch_times", "must be strictly increasing")
        if np.any(np.linalg.norm(values, axis=1) == 0):
            raise sec.error("values", "rows must be non-zero")
        params = {"switch_times": times, "values": values}
    else:
        params = {"half_angle": sec.float("half_angle"), "rate": sec.float("rate"),
                  "phase": sec.float("phase", 0.0)}
    sec.check_unused()
    return ReferenceSpec(name, sensor, kind, params)


def _parse_sensors(sec: _Section, seed: int) -> SensorConfig:
    cfg = SensorConfig(
        vector_noise_std=sec.float("vector_noise_std", 0.0, nonneg=True),
        gyro_noise_std=sec.float("gyro_noise_std", 0.0, nonneg=True),
        delay_tau=sec.float("delay_tau", 0.0, nonneg=True),
        sample_period_vector=sec.optional_float("sample_period_vector", positive=True),
        sample_period_gyro=sec.optional_float("sample_period_gyro", positive=True),
        seed=seed,
    )
    sec.check_unused()
    return cfg


def _parse_observer(name: str, sec: _Section, references: list) -> ObserverSpec:
    if not _NAME.match(name):
        raise ConfigError(f"[{sec.name}]: observer names must be alphanumeric (they prefix CSV columns)")
    kind = sec.choice("type", OBSERVER_TYPES)
    ref = sec.choice("reference", references, references[0])
    if kind == "obs1":
        params = {"gamma_P": sec.float("gamma_P", 3.0, positive=True),
                  "gamma_I": sec.float("gamma_I", 1.0, positive=True),
                  "T": sec.float("T", 10.0, positive=True),
                  "mode": sec.choice("mode", ("fixed", "adaptive", "window"), "fixed")}
        if params["mode"] == "adaptive" or sec.has("delta"):
            params["delta"] = sec.float("delta", 0.1, positive=True)
    elif kind == "baseline":
        params = {"gamma_P": sec.float("gamma_P", 3.0, positive=True)}
    else:
        params = {k: sec.float(k, 1.0, positive=True) for k in ("gamma_z", "gamma", "gamma_c", "gamma_v")}
    Qc0 = None
    if sec.has("Qc_hat0"):
        rows = sec.rows("Qc_hat0")
        try:
            Qc0 = so3.as_rotation(rows)
        except ValueError as exc:
            raise sec.error("Qc_hat0", str(exc)) from None
    sec.check_unused()
    return ObserverSpec(name, kind, params, ref, Qc0)


def _parse_run(sec: _Section) -> RunSpec:
    run = RunSpec(
        dt=sec.float("dt", 1e-3, positive=True),
        horizon=sec.float("horizon", 60.0, nonneg=True),
        seed=sec.int("seed", 0, minimum=0),
        output=sec.raw("output", "scenario"),
        output_every=sec.int("output_every", 1, minimum=1),
    )
    if not re.match(r"^[\w.-]+$", run.output):
        raise sec.error("output", "must be a plain file stem (letters, digits, '_', '-', '.')")
    sec.check_unused()
    return run


def example1_config(noise: bool = False, seed: int = 0, horizon: float = 60.0, dt: float = 1e-3,
                    observers=("obs1", "obs2", "baseline")) -> ScenarioConfig:
    """Preset for the switching-reference example with the published gains."""
    truth = TruthSpec(np.array(EXAMPLE1_R0), "constant", {"omega": np.array(EXAMPLE1_OMEGA)})
    ref = ReferenceSpec("g", "complementary", "piecewise",
                        {"switch_times": np.array([5.0]), "values": np.array([[1.0, 0, 0], [0, 0, 1.0]])})
    sensors = SensorConfig(vector_noise_std=DEFAULT_VECTOR_NOISE_STD if noise else 0.0,
                           gyro_noise_std=DEFAULT_GYRO_NOISE_STD if noise else 0.0, seed=seed)
    presets = {
        "obs1": ObserverSpec("obs1", "obs1", {"gamma_P": 3.0, "gamma_I": 1.0, "T": 10.0, "mode": "fixed"}, "g"),
        "obs2": ObserverSpec("obs2", "obs2", {"gamma_z": 1.0, "gamma": 1.0, "gamma_c": 1.0, "gamma_v": 1.0}, "g"),
        "baseline": ObserverSpec("baseline", "baseline", {"gamma_P": 3.0}, "g"),
    }
    run = RunSpec(dt=dt, horizon=horizon, seed=seed, output="example1_noisy" if noise else "example1")
    return ScenarioConfig(truth, (ref,), sensors, tuple(presets[o] for o in observers), run)


def with_sensors(config: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy of ``config`` with some :class:`SensorConfig` fields replaced."""
    return replace(config, sensors=replace(config.sensors, **changes))
