"""Normalization statistics, residual rescaling, and climatology.

Each variable-level is standardized by its training-period mean and
standard deviation, then rescaled by a residual coefficient xi: the
standard deviation of the one-step tendency of the standardized series,
divided by the geometric mean of those tendency standard deviations over
all variable-levels.  The product of xi over all variable-levels is 1 by
construction.  Statistics are plain (unweighted) spatio-temporal moments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .grid import Field, FieldSeries, GridSpec, ensure_utc

__all__ = [
    "StatEntry",
    "NormStats",
    "Climatology",
    "compute_stats",
    "compute_residual_coeff",
    "normalize",
    "denormalize",
    "clamp_nonnegative",
    "compute_climatology",
    "day_of_year_365",
]


@dataclass
class StatEntry:
    mu: float
    sigma: float
    xi: float = 1.0


@dataclass
class NormStats:
    """Per (variable, level) mean, std, and residual coefficient."""

    entries: dict[tuple[str, str], StatEntry] = dc_field(default_factory=dict)
    step_hours: float | None = None
    period: tuple[str, str] | None = None
    denominator: str = "tendency"

    def entry(self, variable: str, level: str) -> StatEntry:
        try:
            return self.entries[(variable, level)]
        except KeyError:
            raise KeyError(
                f"no normalization stats for {variable!r} level {level!r}"
            ) from None

    def to_json(self, path) -> None:
        doc = {
            "step_hours": self.step_hours,
            "period": list(self.period) if self.period else None,
            "denominator": self.denominator,
            "entries": {
                f"{v}|{l}": {"mu": e.mu, "sigma": e.sigma, "xi": e.xi}
                for (v, l), e in sorted(self.entries.items())
            },
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    @classmethod
    def from_json(cls, path) -> "NormStats":
        doc = json.loads(Path(path).read_text())
        entries = {}
        for key, e in doc["entries"].items():
            v, _, l = key.partition("|")
            entries[(v, l)] = StatEntry(mu=e["mu"], sigma=e["sigma"], xi=e["xi"])
        period = tuple(doc["period"]) if doc.get("period") else None
        return cls(entries=entries, step_hours=doc.get("step_hours"),
                   period=period, denominator=doc.get("denominator", "tendency"))


def _merge_moments(n_a, mean_a, m2_a, n_b, mean_b, m2_b):
    # Chan/Welford pairwise merge of (count, mean, sum of squared deviations)
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * n_b / n
    m2 = m2_a + m2_b + delta * delta * n_a * n_b / n
    return n, mean, m2


def _streaming_moments(values_iter):
    n, mean, m2 = 0, 0.0, 0.0
    for chunk in values_iter:
        chunk = np.asarray(chunk, dtype=np.float64)
        nb = chunk.size
        mb = float(chunk.mean())
        m2b = float(((chunk - mb) ** 2).sum())
        n, mean, m2 = _merge_moments(n, mean, m2, nb, mb, m2b)
    return n, mean, m2


def compute_stats(series_map: dict[tuple[str, str], FieldSeries],
                  period: tuple[datetime, datetime] | None = None) -> NormStats:
    """Mean and standard deviation per variable-level over a period.

    Moments pool every grid point and time step; accumulation is a
    numerically stable streaming merge, matching a two-pass computation
    to better than 1e-10 relative.  Zero variance is an error.
    """
    if not series_map:
        raise ValueError("empty series collection")
    stats = NormStats()
    step = None
    for (variable, level), series in series_map.items():
        values = series.values
        times = series.times
        if period is not None:
            t0, t1 = (ensure_utc(period[0]), ensure_utc(period[1]))
            sel = [i for i, t in enumerate(times) if t0 <= t <= t1]
            if not sel:
                raise ValueError(
                    f"{variable} ({level}): no samples in requested period")
            values = values[sel]
        n, mean, m2 = _streaming_moments(values)
        sigma = float(np.sqrt(m2 / n))
        # rounding noise of an exactly constant field shows up as
        # sigma ~ eps * |mean|; reject that as zero variance too
        if sigma <= 1e-14 * abs(mean):
            raise ValueError(
                f"{variable} ({level}): zero variance over the period; "
                "cannot standardize")
        stats.entries[(variable, level)] = StatEntry(mu=mean, sigma=sigma)
        if step is None:
            step = series.step_hours
    stats.step_hours = step
    if period is not None:
        stats.period = (ensure_utc(period[0]).isoformat(),
                        ensure_utc(period[1]).isoformat())
    return stats


def compute_residual_coeff(series_map: dict[tuple[str, str], FieldSeries],
                           stats: NormStats,
                           denominator: str = "tendency") -> NormStats:
    """Fill the residual coefficients xi into a copy of stats.

    The standardized series T' = (T - mu)/sigma is differenced one step at
    the dataset resolution; xi is std(dT') rescaled by the geometric mean
    across variable-levels.  denominator="tendency" (default) divides by
    gmean of the tendency stds; "standardized" divides by gmean of the
    stds of T' themselves (which are 1 when stats come from the same
    period, so xi then reduces to std(dT') unscaled).
    """
    if denominator not in ("tendency", "standardized"):
        raise ValueError(
            f"denominator must be 'tendency' or 'standardized', got {denominator!r}")
    tend_std = {}
    std_std = {}
    for key, series in series_map.items():
        if len(series) < 2:
            raise ValueError(
                f"{key[0]} ({key[1]}): need at least 2 time steps for the "
                "tendency, got {0}".format(len(series)))
        e = stats.entry(*key)
        tprime = (series.values - e.mu) / e.sigma
        dt = np.diff(tprime, axis=0)
        tend_std[key] = float(np.sqrt(np.mean(dt * dt)))
        std_std[key] = float(tprime.std())
    ref = tend_std if denominator == "tendency" else std_std
    log_vals = np.log(np.array([ref[k] for k in series_map]))
    gmean = float(np.exp(log_vals.mean()))
    out = NormStats(step_hours=stats.step_hours, period=stats.period,
                    denominator=denominator)
    for key in series_map:
        e = stats.entry(*key)
        out.entries[key] = StatEntry(mu=e.mu, sigma=e.sigma,
                                     xi=tend_std[key] / gmean)
    # carry over entries not present in this collection
    for key, e in stats.entries.items():
        out.entries.setdefault(key, StatEntry(mu=e.mu, sigma=e.sigma, xi=e.xi))
    return out


def normalize(field: Field, stats: NormStats) -> Field:
    """T'' = (T - mu) / (xi * sigma), dimensionless."""
    e = stats.entry(field.variable, field.level)
    out = field.with_values((field.values - e.mu) / (e.xi * e.sigma))
    return Field(grid=out.grid, values=out.values, variable=out.variable,
                 level=out.level, valid_time=out.valid_time, units="1",
                 mask=out.mask)


def denormalize(field: Field, stats: NormStats) -> Field:
    """Exact inverse of normalize: T = T'' * xi * sigma + mu."""
    e = stats.entry(field.variable, field.level)
    return field.with_values(field.values * (e.xi * e.sigma) + e.mu)


def clamp_nonnegative(field: Field, floor: float = 1e-8,
                      variables: set[str] | None = None) -> Field:
    """Hard-correct values below floor to exactly floor.

    Intended for de-normalized specific humidity, whose raw model output
    can go negative.  When a variable filter is given, fields outside it
    pass through untouched.  Idempotent and monotone.
    """
    if variables is not None and field.variable not in variables:
        return field
    values = np.where(field.values < floor, floor, field.values)
    return field.with_values(values)


def day_of_year_365(t: datetime) -> int:
    """Day of year on a 365-day calendar; Feb 29 maps to Feb 28's bin."""
    doy = t.timetuple().tm_yday
    year = t.year
    leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
    if leap and doy >= 60:
        doy -= 1
    return doy


@dataclass
class Climatology:
    """Sliding-window mean fields indexed by (day-of-year, hour-of-day).

    data maps (variable, level) to an array [365, n_hours, n_lat, n_lon];
    hours lists the hours-of-day present (e.g. [0, 6, 12, 18] for
    6-hourly data).  Windows are window_days wide, Gaussian-weighted with
    std_days, weights renormalized to sum 1.
    """

    grid: GridSpec
    hours: list[int]
    window_days: int
    std_days: float
    data: dict[tuple[str, str], np.ndarray]

    def values(self, variable: str, level: str, when: datetime) -> np.ndarray:
        when = ensure_utc(when)
        if when.hour not in self.hours:
            raise KeyError(
                f"climatology has no hour-of-day bin for {when.hour:02d}Z "
                f"(available: {self.hours})")
        d = day_of_year_365(when)
        h = self.hours.index(when.hour)
        return self.data[(variable, level)][d - 1, h]

    def field(self, variable: str, level: str, when: datetime,
              units: str | None = None) -> Field:
        return Field(grid=self.grid, values=self.values(variable, level, when),
                     variable=variable, level=level, valid_time=when,
                     units=units)

    @property
    def keys(self) -> list[tuple[str, str]]:
        return list(self.data.keys())

    def to_container(self, path, dtype: str = "f64") -> None:
        """Store climatology fields as a GVF1 container on a pseudo-year axis.

        Bins map to timestamps in 1995 (non-leap): day d, hour h becomes
        1995-01-01 + (d-1) days + h hours.
        """
        from datetime import datetime, timezone
        from .container import write_container
        from .grid import FieldSeries

        t0 = datetime(1995, 1, 1, tzinfo=timezone.utc)
        times = [t0 + timedelta(days=d, hours=h)
                 for d in range(365) for h in self.hours]
        series_map = {}
        for key, arr in self.data.items():
            flat = arr.reshape((365 * len(self.hours),) + self.grid.shape)
            series_map[key] = FieldSeries(self.grid, key[0], key[1], times, flat)
        write_container(series_map, path, dtype=dtype, attrs={
            "climatology": {"window_days": self.window_days,
                            "std_days": self.std_days,
                            "hours": self.hours}})

    @classmethod
    def from_container(cls, path) -> "Climatology":
        from .container import read_container

        c = read_container(path)
        meta = c.attrs.get("climatology")
        if meta is None:
            raise ValueError(f"{path}: container has no climatology attrs")
        hours = [int(h) for h in meta["hours"]]
        n_h = len(hours)
        if len(c.times) != 365 * n_h:
            raise ValueError(
                f"{path}: expected {365 * n_h} climatology bins, "
                f"got {len(c.times)}")
        data = {}
        for name, level, _units in c.variables:
            series = c.series(name, level)
            data[(name, level)] = series.values.reshape(
                (365, n_h) + c.grid.shape)
        return cls(grid=c.grid, hours=hours,
                   window_days=int(meta["window_days"]),
                   std_days=float(meta["std_days"]), data=data)


def _circular_day_distance(d1, d2, period: int = 365):
    d = np.abs(np.asarray(d1) - np.asarray(d2))
    return np.minimum(d, period - d)


def compute_climatology(series_map: dict[tuple[str, str], FieldSeries],
                        window_days: int = 61,
                        gaussian_std_days: float = 10.0) -> Climatology:
    """Day-of-year/hour-of-day climatology with Gaussian-weighted windows.

    For each (day d, hour h) the climatology is the weighted mean over all
    samples at hour h whose circular day-of-year distance from d is at
    most window_days//2, with weights exp(-dd^2 / (2 s^2)), s in days,
    renormalized to sum 1.  Bins with no samples raise, listing (d, h).
    """
    if not series_map:
        raise ValueError("empty series collection")
    if window_days < 1 or window_days % 2 == 0:
        raise ValueError(f"window_days must be odd and positive, got {window_days}")
    if gaussian_std_days <= 0:
        raise ValueError("gaussian_std_days must be positive")
    half = window_days // 2

    first = next(iter(series_map.values()))
    grid = first.grid
    times = first.times
    hours = sorted({t.hour for t in times})
    doys = np.array([day_of_year_365(t) for t in times])
    t_hours = np.array([t.hour for t in times])

    # weight matrix per hour bin: [365 days, samples at that hour]
    weights = {}
    missing = []
    for h in hours:
        idx = np.nonzero(t_hours == h)[0]
        dd = _circular_day_distance(np.arange(1, 366)[:, None], doys[idx][None, :])
        w = np.exp(-dd.astype(float) ** 2 / (2.0 * gaussian_std_days ** 2))
        w[dd > half] = 0.0
        sums = w.sum(axis=1)
        empty = np.nonzero(sums == 0)[0]
        missing.extend((int(d + 1), h) for d in empty)
        sums[sums == 0] = 1.0
        weights[h] = (idx, w / sums[:, None])
    if missing:
        raise ValueError(
            "climatology windows without samples at (day, hour): "
            + ", ".join(str(m) for m in missing[:20])
            + ("..." if len(missing) > 20 else ""))

    data = {}
    for key, series in series_map.items():
        if series.grid != grid:
            raise ValueError(f"{key}: climatology inputs must share one grid")
        if series.times != times:
            raise ValueError(f"{key}: climatology inputs must share one time axis")
        out = np.empty((365, len(hours)) + grid.shape)
        flat = series.values.reshape(len(series), -1)
        for hi, h in enumerate(hours):
            idx, w = weights[h]
            out[:, hi] = (w @ flat[idx]).reshape((365,) + grid.shape)
        data[key] = out
    return Climatology(grid=grid, hours=hours, window_days=window_days,
                       std_days=gaussian_std_days, data=data)
