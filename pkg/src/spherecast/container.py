"""GVF1 gridded-data container and score-table output formats.

A GVF1 file is an 8-byte little-endian header length, a UTF-8 JSON header
(newline-terminated) and a contiguous little-endian float payload ordered
time-major, then variable, then latitude (north to south), then longitude.
The format is dependency-free and round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .grid import (
    Field,
    FieldSeries,
    GridSpec,
    ensure_utc,
    make_equiangular_grid,
    make_gaussian_grid,
)

__all__ = [
    "MAGIC",
    "VERSION",
    "ContainerError",
    "Container",
    "ScoreRecord",
    "read_container",
    "write_container",
    "write_scores",
    "read_scores",
]

MAGIC = "GVF1"
VERSION = 1

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


class ContainerError(IOError):
    """Structural problem in a GVF1 file (magic, dtype, truncation...)."""


def _format_time(t: datetime) -> str:
    return ensure_utc(t).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_time(s: str) -> datetime:
    return ensure_utc(datetime.strptime(s, "%Y-%m-%dT%H:%M:%SZ"))


def _grid_to_json(grid: GridSpec) -> dict:
    return {"kind": grid.kind, "n_lat": grid.n_lat, "n_lon": grid.n_lon,
            "lon_origin": grid.lon_origin}


def _grid_from_json(spec: dict, path: Path) -> GridSpec:
    kind = spec.get("kind")
    if kind == "gaussian":
        return make_gaussian_grid(spec["n_lat"], spec["n_lon"],
                                  lon_origin=spec.get("lon_origin", 0.0))
    if kind == "equiangular":
        return make_equiangular_grid(spec["n_lat"], spec["n_lon"],
                                     lon_origin=spec.get("lon_origin", 0.0))
    raise ContainerError(f"{path}: unknown grid kind {kind!r} in header")


class Container:
    """Lazy reader over one GVF1 file.

    The header is validated up front (magic, version, dtype, payload
    length); fields are materialized per (time, variable) chunk from a
    read-only memory map.  Multiple readers on one file are safe.
    """

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise ContainerError(f"{self.path}: no such file")
        size = self.path.stat().st_size
        if size < 8:
            raise ContainerError(
                f"{self.path}: file too short for header length prefix "
                f"({size} < 8 bytes)")
        with open(self.path, "rb") as fh:
            header_len = int.from_bytes(fh.read(8), "little")
            if size < 8 + header_len:
                raise ContainerError(
                    f"{self.path}: declared header length {header_len} "
                    f"exceeds file size {size}")
            raw = fh.read(header_len)
        try:
            header = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ContainerError(f"{self.path}: malformed header JSON: {exc}")
        if header.get("magic") != MAGIC:
            raise ContainerError(
                f"{self.path}: magic mismatch: expected {MAGIC!r}, "
                f"got {header.get('magic')!r}")
        if header.get("version") != VERSION:
            raise ContainerError(
                f"{self.path}: unsupported version {header.get('version')!r}")
        if header.get("dtype") not in _DTYPES:
            raise ContainerError(
                f"{self.path}: unsupported dtype {header.get('dtype')!r}")

        self.header = header
        self.dtype = _DTYPES[header["dtype"]]
        self.dtype_name = header["dtype"]
        self.grid = _grid_from_json(header["grid"], self.path)
        self.times = [_parse_time(s) for s in header["time_axis"]]
        self.variables = [(v["name"], v.get("level", "single"), v.get("units", "1"))
                          for v in header["variables"]]
        self.attrs = header.get("attrs", {})

        keys = [(n, l) for n, l, _ in self.variables]
        if len(set(keys)) != len(keys):
            raise ContainerError(
                f"{self.path}: duplicate (variable, level) in header")

        self._offset = 8 + header_len
        n_time, n_var = len(self.times), len(self.variables)
        expected = (self._offset
                    + n_time * n_var * self.grid.n_lat * self.grid.n_lon
                    * self.dtype.itemsize)
        if size != expected:
            raise ContainerError(
                f"{self.path}: payload truncated or padded: file is "
                f"{size} bytes, expected {expected} "
                f"(payload starts at offset {self._offset})")
        shape = (n_time, n_var, self.grid.n_lat, self.grid.n_lon)
        if n_time * n_var:
            self._data = np.memmap(self.path, dtype=self.dtype, mode="r",
                                   offset=self._offset, shape=shape)
        else:
            self._data = np.empty(shape, dtype=self.dtype)

    @property
    def keys(self) -> list[tuple[str, str]]:
        return [(n, l) for n, l, _ in self.variables]

    def _var_index(self, variable: str, level: str) -> int:
        try:
            return self.keys.index((variable, level))
        except ValueError:
            raise KeyError(
                f"{self.path}: variable {variable!r} level {level!r} "
                "not in container") from None

    def values(self, time_index: int, variable: str, level: str = "single"):
        """One (n_lat, n_lon) float64 array, copied out of the map."""
        j = self._var_index(variable, level)
        return np.array(self._data[time_index, j], dtype=np.float64)

    def field(self, time_index: int, variable: str, level: str = "single") -> Field:
        j = self._var_index(variable, level)
        name, lev, units = self.variables[j]
        return Field(grid=self.grid, values=self.values(time_index, variable, level),
                     variable=name, level=lev, valid_time=self.times[time_index],
                     units=units)

    def series(self, variable: str, level: str = "single") -> FieldSeries:
        j = self._var_index(variable, level)
        name, lev, units = self.variables[j]
        vals = np.array(self._data[:, j], dtype=np.float64)
        return FieldSeries(self.grid, name, lev, list(self.times), vals,
                           units=units)

    def to_dict(self) -> dict[tuple[str, str], FieldSeries]:
        """Materialize every variable as a FieldSeries, keyed (name, level)."""
        return {(n, l): self.series(n, l) for n, l, _ in self.variables}


def read_container(path) -> Container:
    """Open a GVF1 file; header is validated before any payload access."""
    return Container(path)


def write_container(series_map, path, dtype: str = "f32",
                    attrs: dict | None = None) -> None:
    """Write FieldSeries sharing one grid and time axis to a GVF1 file.

    series_map: mapping (variable, level) -> FieldSeries, or a list of
    FieldSeries.  Variable order in the file follows the input order.
    """
    if isinstance(series_map, dict):
        series_list = list(series_map.values())
    else:
        series_list = list(series_map)
    if not series_list:
        raise ValueError("nothing to write: empty series collection")
    if dtype not in _DTYPES:
        raise ValueError(f"dtype must be one of {sorted(_DTYPES)}, got {dtype!r}")
    grid = series_list[0].grid
    times = series_list[0].times
    for s in series_list[1:]:
        if s.grid != grid:
            raise ValueError(
                f"mixed grids: {s.variable} ({s.level}) is on a different grid")
        if s.times != times:
            raise ValueError(
                f"mixed time axes: {s.variable} ({s.level}) differs")

    header = {
        "magic": MAGIC,
        "version": VERSION,
        "grid": _grid_to_json(grid),
        "variables": [{"name": s.variable, "level": s.level, "units": s.units}
                      for s in series_list],
        "time_axis": [_format_time(t) for t in times],
        "dtype": dtype,
        "attrs": attrs or {},
    }
    raw = (json.dumps(header, sort_keys=False) + "\n").encode("utf-8")
    np_dtype = _DTYPES[dtype]
    payload = np.stack([s.values for s in series_list], axis=1) if times else None
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(len(raw).to_bytes(8, "little"))
        fh.write(raw)
        if payload is not None:
            fh.write(np.ascontiguousarray(payload, dtype=np_dtype).tobytes())


@dataclass(frozen=True)
class ScoreRecord:
    """One verification score: (variable, lead, metric) with bootstrap CI."""

    variable: str
    lead_hours: int
    metric: str
    value: float
    ci_low: float
    ci_high: float
    n_inits: int

    def __post_init__(self):
        if not (self.ci_low <= self.value <= self.ci_high):
            raise ValueError(
                f"{self.variable} {self.metric} at {self.lead_hours}h: "
                f"value {self.value} outside CI [{self.ci_low}, {self.ci_high}]")


_SCORE_COLUMNS = ["variable", "lead_hours", "metric", "value", "ci_low",
                  "ci_high", "n_inits"]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_scores(records, path, format: str = "csv") -> None:
    """Write score records sorted by (variable, lead_hours, metric).

    CSV columns are exactly variable,lead_hours,metric,value,ci_low,
    ci_high,n_inits with floats at 9 significant digits; jsonl writes one
    record object per line in the same order.
    """
    records = sorted(records, key=lambda r: (r.variable, r.lead_hours, r.metric))
    if not records:
        raise ValueError("no score records to write")
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_SCORE_COLUMNS)
            for r in records:
                writer.writerow([r.variable, r.lead_hours, r.metric,
                                 _fmt(r.value), _fmt(r.ci_low), _fmt(r.ci_high),
                                 r.n_inits])
    elif format == "jsonl":
        with open(path, "w") as fh:
            for r in records:
                fh.write(json.dumps({
                    "variable": r.variable, "lead_hours": r.lead_hours,
                    "metric": r.metric, "value": float(_fmt(r.value)),
                    "ci_low": float(_fmt(r.ci_low)),
                    "ci_high": float(_fmt(r.ci_high)),
                    "n_inits": r.n_inits}) + "\n")
    else:
        raise ValueError(f"format must be 'csv' or 'jsonl', got {format!r}")


def read_scores(path, format: str = "csv") -> list[ScoreRecord]:
    """Parse a score file written by write_scores."""
    path = Path(path)
    out = []
    if format == "csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != _SCORE_COLUMNS:
                raise ContainerError(
                    f"{path}: unexpected score columns {reader.fieldnames}")
            for row in reader:
                out.append(ScoreRecord(
                    variable=row["variable"], lead_hours=int(row["lead_hours"]),
                    metric=row["metric"], value=float(row["value"]),
                    ci_low=float(row["ci_low"]), ci_high=float(row["ci_high"]),
                    n_inits=int(row["n_inits"])))
    elif format == "jsonl":
        with open(path) as fh:
            for line in fh:
                d = json.loads(line)
                out.append(ScoreRecord(**d))
    else:
        raise ValueError(f"format must be 'csv' or 'jsonl', got {format!r}")
    return out
