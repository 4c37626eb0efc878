"""Global grid geometry, latitude weights, and the in-memory field model.

Latitudes are always ordered north to south (ERA5 convention); longitudes
are uniform in [0, 360).  Gaussian grids carry the Gauss-Legendre quadrature
weights used by the spectral transform, while verification uses plain
cos(latitude) weights normalized to unit mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
import warnings

import numpy as np

__all__ = [
    "VARIABLES",
    "GridSpec",
    "Field",
    "FieldSeries",
    "make_gaussian_grid",
    "make_equiangular_grid",
    "gauss_legendre",
    "metric_weights",
    "cosine_weights",
    "ensure_utc",
]

# Variable registry: short name -> (long name, units).
VARIABLES = {
    "U": ("zonal wind", "m s-1"),
    "V": ("meridional wind", "m s-1"),
    "T": ("air temperature", "K"),
    "Q": ("specific humidity", "kg kg-1"),
    "SP": ("surface pressure", "Pa"),
    "t2m": ("2-meter temperature", "K"),
    "U500": ("zonal wind at 500 hPa", "m s-1"),
    "V500": ("meridional wind at 500 hPa", "m s-1"),
    "T500": ("air temperature at 500 hPa", "K"),
    "Z500": ("geopotential height at 500 hPa", "m"),
    "Q500": ("specific humidity at 500 hPa", "kg kg-1"),
    "Zsfc": ("geopotential at the surface", "m2 s-2"),
    "LSM": ("land-sea mask", "1"),
    "Is": ("integrated instantaneous solar irradiance", "J m-2"),
}


def default_units(variable: str) -> str:
    """Units for a registered variable, or "1" when unknown."""
    return VARIABLES.get(variable, ("", "1"))[1]


def ensure_utc(t: datetime) -> datetime:
    """Attach UTC to naive datetimes; convert aware ones to UTC."""
    if t.tzinfo is None:
        return t.replace(tzinfo=timezone.utc)
    return t.astimezone(timezone.utc)


def gauss_legendre(n: int, tol: float = 1e-15, max_iter: int = 100):
    """Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.

    Nodes are returned in descending order (maps to north-to-south
    latitudes via lat = asin(x)).  Newton iteration on the Legendre
    recurrence converges to node accuracy better than 1e-14; weights
    w = 2 / ((1 - x^2) P_n'(x)^2) then sum to 2 to within 1e-12.
    """
    if n < 1:
        raise ValueError(f"need at least 1 quadrature node, got {n}")
    k = np.arange(n)
    # Tricomi initial guess: already descending in x
    x = np.cos(np.pi * (k + 0.75) / (n + 0.5))
    dp = np.ones_like(x)
    for _ in range(max_iter):
        p_prev = np.ones_like(x)
        p = x.copy()
        for l in range(2, n + 1):
            p_prev, p = p, ((2 * l - 1) * x * p - (l - 1) * p_prev) / l
        if n == 1:
            p, p_prev = x.copy(), np.ones_like(x)
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    # final derivative at the converged nodes
    p_prev = np.ones_like(x)
    p = x.copy()
    for l in range(2, n + 1):
        p_prev, p = p, ((2 * l - 1) * x * p - (l - 1) * p_prev) / l
    if n == 1:
        p, p_prev = x.copy(), np.ones_like(x)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x, w


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Geometry of a global latitude-longitude grid.

    latitudes: degrees, north to south; longitudes: degrees in [0, 360),
    uniform step 360/n_lon starting at lon_origin.  quad_weights holds
    Gauss-Legendre weights for kind="gaussian" and is None otherwise.
    """

    n_lat: int
    n_lon: int
    latitudes: np.ndarray
    longitudes: np.ndarray
    kind: str
    quad_weights: np.ndarray | None = None
    lon_origin: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "equiangular"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.n_lat < 2:
            raise ValueError(f"n_lat must be >= 2, got {self.n_lat}")
        if self.n_lon < 4 or self.n_lon % 2:
            raise ValueError(f"n_lon must be even and >= 4, got {self.n_lon}")
        if self.latitudes.shape != (self.n_lat,):
            raise ValueError("latitudes shape does not match n_lat")
        if self.longitudes.shape != (self.n_lon,):
            raise ValueError("longitudes shape does not match n_lon")
        if np.any(np.diff(self.latitudes) >= 0):
            raise ValueError("latitudes must be strictly north to south")
        if self.kind == "gaussian":
            if self.quad_weights is None:
                raise ValueError("gaussian grids require quad_weights")
            if abs(self.quad_weights.sum() - 2.0) > 1e-12:
                raise ValueError("quadrature weights must sum to 2")
        elif np.any(np.abs(self.latitudes) >= 90.0):
            raise ValueError("equiangular latitudes must exclude the poles")
        self.latitudes.flags.writeable = False
        self.longitudes.flags.writeable = False
        if self.quad_weights is not None:
            self.quad_weights.flags.writeable = False

    # Construction is deterministic, so identity is (kind, shape, origin).
    def _key(self):
        return (self.kind, self.n_lat, self.n_lon, round(self.lon_origin, 12))

    def __eq__(self, other):
        return isinstance(other, GridSpec) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_lat, self.n_lon)


def _uniform_longitudes(n_lon: int, origin: float) -> np.ndarray:
    return (origin + 360.0 * np.arange(n_lon) / n_lon) % 360.0


def make_gaussian_grid(n_lat: int, n_lon: int, lon_origin: float = 0.0) -> GridSpec:
    """Regular Gaussian grid: Gauss-Legendre latitudes, uniform longitudes.

    n_lat must be even (latitude rows come in hemispheric pairs; the
    640 x 1280 grid is the N320 configuration, ~0.28 deg spacing near
    the equator).  n_lon >= 2*n_lat is recommended so zonal resolution
    keeps up with the quadrature degree; a warning is issued otherwise.
    """
    if n_lat < 2 or n_lat % 2:
        raise ValueError(f"n_lat must be even and >= 2, got {n_lat}")
    if n_lon < 4 or n_lon % 2:
        raise ValueError(f"n_lon must be even and >= 4, got {n_lon}")
    if n_lon < 2 * n_lat:
        warnings.warn(
            f"n_lon={n_lon} < 2*n_lat={2 * n_lat}: zonal resolution below "
            "the quadrature degree", stacklevel=2)
    x, w = gauss_legendre(n_lat)
    lats = np.degrees(np.arcsin(x))
    return GridSpec(
        n_lat=n_lat, n_lon=n_lon, latitudes=lats,
        longitudes=_uniform_longitudes(n_lon, lon_origin),
        kind="gaussian", quad_weights=w, lon_origin=lon_origin)


def make_equiangular_grid(n_lat: int, n_lon: int, lon_origin: float = 0.0) -> GridSpec:
    """Equiangular grid on cell centers (poles excluded)."""
    if n_lat < 2:
        raise ValueError(f"n_lat must be >= 2, got {n_lat}")
    if n_lon < 4 or n_lon % 2:
        raise ValueError(f"n_lon must be even and >= 4, got {n_lon}")
    step = 180.0 / n_lat
    lats = 90.0 - step * (np.arange(n_lat) + 0.5)
    return GridSpec(
        n_lat=n_lat, n_lon=n_lon, latitudes=lats,
        longitudes=_uniform_longitudes(n_lon, lon_origin),
        kind="equiangular", lon_origin=lon_origin)


def cosine_weights(latitudes: np.ndarray, normalized: bool = True) -> np.ndarray:
    """cos(latitude) weights; normalized=True rescales to unit mean.

    Unit-mean weights make a uniform bias c verify to RMSE exactly |c|
    (the WeatherBench2 convention); normalized=False gives the bare
    cos(latitude) factor.
    """
    w = np.cos(np.radians(np.asarray(latitudes, dtype=float)))
    if normalized:
        w = w / w.mean()
    return w


def metric_weights(grid: GridSpec, normalized: bool = True) -> np.ndarray:
    """Per-latitude verification weights for a grid (unit mean by default)."""
    return cosine_weights(grid.latitudes, normalized=normalized)


@dataclass(frozen=True, eq=False)
class Field:
    """One 2-D global scalar field at a valid time.

    values is an (n_lat, n_lon) array in the variable's physical units.
    NaNs are rejected unless an explicit mask marks them.
    """

    grid: GridSpec
    values: np.ndarray
    variable: str
    level: str = "single"
    valid_time: datetime | None = None
    units: str | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"{self.grid.shape}")
        if self.mask is None and not np.all(np.isfinite(self.values)):
            raise ValueError(
                f"non-finite values in {self.variable} ({self.level}) "
                "without an explicit mask")
        if self.units is None:
            object.__setattr__(self, "units", default_units(self.variable))
        if self.valid_time is not None:
            object.__setattr__(self, "valid_time", ensure_utc(self.valid_time))

    @property
    def key(self) -> tuple[str, str]:
        return (self.variable, self.level)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(grid=self.grid, values=values, variable=self.variable,
                     level=self.level, valid_time=self.valid_time,
                     units=self.units, mask=self.mask)


class FieldSeries:
    """Time-ordered stack of fields for one variable-level on one grid.

    Times must be strictly increasing with a constant step (1 h or 6 h in
    practice; any uniform step is accepted).
    """

    def __init__(self, grid: GridSpec, variable: str, level: str,
                 times: list[datetime], values: np.ndarray,
                 units: str | None = None):
        times = [ensure_utc(t) for t in times]
        values = np.asarray(values)
        if values.shape != (len(times),) + grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"({len(times)},) + {grid.shape}")
        steps = [t1 - t0 for t0, t1 in zip(times, times[1:])]
        if any(s <= timedelta(0) for s in steps):
            raise ValueError("valid times must be strictly increasing")
        if len(set(steps)) > 1:
            raise ValueError("time step must be constant")
        self.grid = grid
        self.variable = variable
        self.level = level
        self.times = times
        self.values = values
        self.units = units if units is not None else default_units(variable)

    @classmethod
    def from_fields(cls, fields: list[Field]) -> "FieldSeries":
        if not fields:
            raise ValueError("empty field list")
        first = fields[0]
        for f in fields[1:]:
            if f.grid != first.grid or f.key != first.key:
                raise ValueError("fields must share grid, variable and level")
        return cls(first.grid, first.variable, first.level,
                   [f.valid_time for f in fields],
                   np.stack([f.values for f in fields]), units=first.units)

    @property
    def key(self) -> tuple[str, str]:
        return (self.variable, self.level)

    @property
    def step(self) -> timedelta | None:
        if len(self.times) < 2:
            return None
        return self.times[1] - self.times[0]

    @property
    def step_hours(self) -> float | None:
        s = self.step
        return None if s is None else s.total_seconds() / 3600.0

    def __len__(self) -> int:
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(grid=self.grid, values=self.values[i],
                     variable=self.variable, level=self.level,
                     valid_time=self.times[i], units=self.units)

    def __iter__(self):
        return (self.field(i) for i in range(len(self)))

    def at(self, when: datetime) -> Field:
        when = ensure_utc(when)
        try:
            i = self.times.index(when)
        except ValueError:
            raise KeyError(
                f"time {when.isoformat()} not in series "
                f"{self.variable} ({self.level})") from None
        return self.field(i)
