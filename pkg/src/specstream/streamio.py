"""Stream file formats: CSV measurement streams plus JSON sidecars/reports.

The canonical stream is a UTF-8 CSV with header ``t,<sensor_1>,...`` and
one row per sample instant; values are written at 17 significant digits so
a write/read round trip is value-exact for doubles. Optional metadata
(sampling rate, units, source) lives in a JSON sidecar next to the CSV so
the CSV itself stays tool-friendly. All writers are atomic
(write-then-rename) and all read errors carry line numbers.
"""
from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StreamData",
    "sidecar_path",
    "write_stream",
    "read_stream",
    "write_indicator_series",
    "write_stages_json",
    "write_report_json",
    "write_curves",
]


@dataclass(frozen=True)
class StreamData:
    """In-memory stream: time labels, sensor rows, names, metadata."""

    t: np.ndarray
    values: np.ndarray
    names: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or values.ndim != 2 or values.shape[1] != t.size:
            raise ValueError("values must be (sensors, len(t))")
        if t.size == 0:
            raise ValueError("stream has no samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("t must be strictly increasing")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(t)):
            raise ValueError("stream contains non-finite values")
        if len(self.names) != values.shape[0]:
            raise ValueError("one name per sensor row required")
        t.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))

    @property
    def sensor_count(self) -> int:
        return self.values.shape[0]

    @property
    def sample_count(self) -> int:
        return self.t.size


def sidecar_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + ".json"


def _atomic_write(path: str, writer) -> None:
    """Write via a temp file in the target directory, then rename over."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_stream(path: str, stream: StreamData) -> None:
    """Write the canonical CSV; metadata goes to the JSON sidecar."""

    def body(fh):
        w = csv.writer(fh)
        w.writerow(["t", *stream.names])
        for j in range(stream.sample_count):
            w.writerow([_fmt(stream.t[j]),
                        *(_fmt(v) for v in stream.values[:, j])])

    _atomic_write(path, body)
    if stream.meta:
        write_report_json(sidecar_path(path), stream.meta)


def read_stream(path: str) -> StreamData:
    """Parse a stream CSV (plus sidecar when present), strictly.

    Malformed rows raise ValueError naming the offending line number;
    validation matches StreamData's invariants (constant column count,
    strictly increasing t, finite values).
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: line 1: empty file, expected header")
        if len(header) < 2 or header[0].strip() != "t":
            raise ValueError(
                f"{path}: line 1: header must be 't,<sensor>...', got "
                f"{','.join(header[:3])}...")
        names = tuple(h.strip() for h in header[1:])
        ncols = len(header)
        t_vals = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncols:
                raise ValueError(
                    f"{path}: line {lineno}: expected {ncols} columns, "
                    f"found {len(row)}")
            try:
                parsed = [float(x) for x in row]
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: non-numeric value in row")
            if not all(np.isfinite(parsed)):
                raise ValueError(
                    f"{path}: line {lineno}: non-finite value in row")
            t_vals.append(parsed[0])
            rows.append(parsed[1:])
    if not rows:
        raise ValueError(f"{path}: line 2: no data rows")
    t = np.array(t_vals)
    if np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 3
        raise ValueError(f"{path}: line {bad}: t not strictly increasing")
    meta = {}
    side = sidecar_path(path)
    if os.path.exists(side):
        with open(side, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    return StreamData(t=t, values=np.array(rows).T, names=names, meta=meta)


def write_indicator_series(path: str, rows) -> None:
    """CSV export of indicator rows (t_end, name, value, ratio, flag)."""

    def body(fh):
        w = csv.writer(fh)
        w.writerow(["t_end", "name", "value", "ratio", "flag"])
        for t_end, name, value, ratio, flag in rows:
            w.writerow([_fmt(t_end), name, _fmt(value),
                        "" if ratio is None else _fmt(ratio),
                        int(bool(flag))])

    _atomic_write(path, body)


def write_stages_json(path: str, segments) -> None:
    """JSON export of a stage list from stage_segmentation."""
    payload = [
        {"state": s.state, "index_start": s.index_start,
         "index_end": s.index_end, "t_start": s.t_start, "t_end": s.t_end,
         "length": s.length}
        for s in segments
    ]
    write_report_json(path, {"stages": payload})


def write_report_json(path: str, payload: dict) -> None:
    _atomic_write(
        path, lambda fh: json.dump(payload, fh, indent=2, sort_keys=True))


def write_curves(path: str, columns: dict) -> None:
    """CSV export of aligned named columns (e.g. grid plus densities)."""
    names = list(columns)
    if not names:
        raise ValueError("no columns to write")
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    length = arrays[0].size
    for n, a in zip(names, arrays):
        if a.ndim != 1 or a.size != length:
            raise ValueError(f"column {n!r} length disagrees")

    def body(fh):
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(length):
            w.writerow([_fmt(a[i]) for a in arrays])

    _atomic_write(path, body)
