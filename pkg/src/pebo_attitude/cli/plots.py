"""Plain-text matplotlib scripts for a trace CSV."""

from __future__ import annotations

import csv
from pathlib import Path

EULER = ("yaw", "pitch", "roll")

_PREAMBLE = '''import csv
import math

import matplotlib.pyplot as plt

TRACE = {trace!r}

with open(TRACE, newline="") as fh:
    rows = list(csv.DictReader(fh))
col = {{name: [float(r[name]) for r in rows] for name in rows[0]}}
t = col["t"]
'''

_EULER_BODY = '''
fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
for ax, angle in zip(axes, {angles!r}):
    ax.plot(t, [math.degrees(v) for v in col[angle + "_true"]], "k", label="true")
    for obs in {observers!r}:
        ax.plot(t, [math.degrees(v) for v in col[obs + "_" + angle]], label=obs)
    ax.set_ylabel(angle + " (deg)")
    ax.grid(True)
axes[0].legend()
axes[-1].set_xlabel("t (s)")
fig.tight_layout()
fig.savefig({png!r})
'''

_ERROR_BODY = '''
fig, ax = plt.subplots(figsize=(7, 4))
for obs in {observers!r}:
    ax.plot(t, [max(v, 1e-16) for v in col[obs + "_dist"]], label=obs)
ax.set_yscale("log")
ax.set_xlabel("t (s)")
ax.set_ylabel("attitude error")
ax.grid(True, which="both")
ax.legend()
fig.tight_layout()
fig.savefig({png!r})
'''


def trace_observers(header) -> list[str]:
    """Observer names, in column order, from ``<name>_dist`` columns."""
    return [c[: -len("_dist")] for c in header if c.endswith("_dist")]


def emit_plots(trace_path, out_dir=None) -> list[Path]:
    """Write ``<stem>_euler.py`` and ``<stem>_error.py`` next to the trace.

    Raises ``ValueError`` for an empty trace or a missing column.
    """
    trace_path = Path(trace_path)
    with trace_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        first = next(reader, None)
    if not header or first is None:
        raise ValueError(f"{trace_path}: trace is empty")
    observers = trace_observers(header)
    if not observers:
        raise ValueError(f"{trace_path}: missing column '<observer>_dist'")
    required = ["t"] + [f"{a}_true" for a in EULER]
    for obs in observers:
        required += [f"{obs}_{a}" for a in EULER] + [f"{obs}_dist", f"{obs}_V"]
    for name in required:
        if name not in header:
            raise ValueError(f"{trace_path}: missing column {name!r}")

    d = Path(out_dir) if out_dir is not None else trace_path.parent
    d.mkdir(parents=True, exist_ok=True)
    stem = trace_path.stem
    head = _PREAMBLE.format(trace=str(trace_path.resolve()))
    scripts = {
        d / f"{stem}_euler.py": _EULER_BODY.format(angles=EULER, observers=observers, png=f"{stem}_euler.png"),
        d / f"{stem}_error.py": _ERROR_BODY.format(observers=observers, png=f"{stem}_error.png"),
    }
    for path, body in scripts.items():
        path.write_text(head + body)
    return list(scripts)
