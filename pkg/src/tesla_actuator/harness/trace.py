"""Per-step trace records and their CSV form."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, NamedTuple

SPEED_LIMIT = "speed_limit_exceeded"
ALIASING = "aliasing"


class TraceSample(NamedTuple):
    t: float              # [s]
    q_turbine: float      # [rad]
    omega_turbine: float  # [RPM]
    q_out: float          # [rad]
    x: float              # true slide position [mm]
    encoder_count: int
    u: float              # valve voltage actually applied [V]
    direction: int
    tau_drive: float      # [N m]
    tau_load: float       # turbine-side load torque [N m]
    force: float          # axial load on the slide, + along +x [N]
    error: float          # measured position - target [mm]
    flags: frozenset = frozenset()


COLUMNS = TraceSample._fields
_INT_COLUMNS = {"encoder_count", "direction"}


def _fmt(name, value):
    if name == "flags":
        return ";".join(sorted(value))
    if name in _INT_COLUMNS:
        return str(int(value))
    # repr gives the shortest string that round-trips to the same double
    return repr(float(value))


def trace_to_csv(trace: Iterable[TraceSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for s in trace:
        w.writerow([_fmt(n, v) for n, v in zip(COLUMNS, s)])
    return buf.getvalue()


def trace_from_csv(text: str) -> list[TraceSample]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected trace header: {header}")
    out = []
    for row in rows:
        vals = []
        for name, cell in zip(COLUMNS, row):
            if name == "flags":
                vals.append(frozenset(f for f in cell.split(";") if f))
            elif name in _INT_COLUMNS:
                vals.append(int(cell))
            else:
                vals.append(float(cell))
        out.append(TraceSample(*vals))
    return out


def write_atomic(path: str | Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
