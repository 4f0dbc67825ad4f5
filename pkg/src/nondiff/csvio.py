"""CSV snapshots and reports, written with 17 significant digits."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .profiles import Field1D

FMT = "%.17g"
REPORT_COLUMNS = ("t", "l2_error", "c1", "c2", "ratio", "min_u", "mass")
_SNAP_RE = re.compile(r"^(?P<prefix>[a-z]+)_t(?P<time>.+)\.csv$")


def snapshot_name(t: float, prefix: str = "snapshot") -> str:
    # repr is the shortest string that round-trips the double
    return f"{prefix}_t{float(t)!r}.csv"


def write_columns(path: Path, header: tuple[str, ...], columns) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header),
               comments="")


def read_columns(path: Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_snapshot(directory: Path, f: Field1D, prefix: str = "snapshot",
                   column: str = "u") -> Path:
    path = Path(directory) / snapshot_name(f.time, prefix)
    write_columns(path, ("x", column), (f.x, f.values))
    return path


def read_snapshot(path: Path) -> Field1D:
    """Rebuild a :class:`Field1D` from an ``x,<value>`` CSV.

    The grid is recovered from the cell centres and the time from the file
    name.
    """
    path = Path(path)
    m = _SNAP_RE.match(path.name)
    if m is None:
        raise ValueError(f"not a snapshot file name: {path.name}")
    header, data = read_columns(path)
    if len(header) != 2 or header[0] != "x":
        raise ValueError(f"{path}: expected columns x,<value>, got {header}")
    x, values = data[:, 0], data[:, 1]
    n = x.size
    h = (x[-1] - x[0]) / (n - 1) if n > 1 else 2.0 * abs(x[0])
    # centres are rounded on output; snap the recovered half-width
    x_max = float(f"{x[-1] + 0.5 * h:.12g}")
    if n > 1 and not np.allclose(np.diff(x), h, rtol=1e-9, atol=0.0):
        raise ValueError(f"{path}: grid is not uniform")
    return Field1D(float(x_max), n, values, float(m.group("time")))


def snapshot_column(path: Path) -> str:
    """Name of the value column of a snapshot file."""
    with Path(path).open() as fh:
        return fh.readline().strip().split(",")[-1]


def list_snapshots(directory: Path, prefix: str = "snapshot") -> list[Path]:
    paths = []
    for p in Path(directory).glob(f"{prefix}_t*.csv"):
        m = _SNAP_RE.match(p.name)
        if m and m.group("prefix") == prefix:
            paths.append((float(m.group("time")), p))
    return [p for _, p in sorted(paths)]


def write_report(path: Path, report) -> None:
    rows = np.array(list(report.rows()), dtype=float).reshape(-1, len(REPORT_COLUMNS))
    write_columns(path, REPORT_COLUMNS, rows.T)
