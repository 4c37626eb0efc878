"""Top-of-atmosphere solar irradiance forcing.

Instantaneous irradiance is max(G_SC * (1/d)^2 * cos(zenith), 0) in W m-2.
The annual solar "constant" G_SC is linearly interpolated between annual
table values on a 365.2425-day Gregorian year; years past the table are
mapped onto a repeating 13-year cycle starting 1983.  Sun geometry
(declination, equation of time, earth-sun distance) uses the NOAA solar
calculator series (truncated Meeus), accurate to well under 0.3 deg in
zenith for 1979-2030; full SPA precision is unnecessary for a gridded
forcing field.  Forcing windows are accumulated minute by minute
(left-endpoint sampling, 60 s each) into J m-2 and labeled by the window
ending time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from functools import reduce

import numpy as np

from .grid import Field, GridSpec, ensure_utc

__all__ = [
    "SolarConfig",
    "SolarGeometry",
    "solar_constant_at",
    "solar_geometry",
    "sun_ephemeris",
    "instantaneous_irradiance",
    "irradiance_from_geometry",
    "accumulated_irradiance",
    "read_gsc_csv",
]

GREGORIAN_YEAR_DAYS = 365.2425
DEFAULT_GSC = 1361.0  # W m-2, used for every year when no table is supplied

_EPOCH = datetime(1979, 1, 1, tzinfo=timezone.utc)


@dataclass
class SolarConfig:
    """Solar-constant table and cycle/accumulation conventions."""

    gsc_table: dict[int, float] | None = None
    cycle_start: int = 1983
    cycle_length: int = 13
    year_days: float = GREGORIAN_YEAR_DAYS
    minute_seconds: float = 60.0

    def __post_init__(self):
        if self.gsc_table is not None:
            years = sorted(self.gsc_table)
            if not years:
                raise ValueError("gsc_table must not be empty")
            if years != list(range(years[0], years[-1] + 1)):
                raise ValueError("gsc_table years must be contiguous")
            for y, g in self.gsc_table.items():
                if not 1300.0 <= g <= 1450.0:
                    raise ValueError(
                        f"gsc_table[{y}] = {g} outside plausible range "
                        "[1300, 1450] W m-2")

    def annual_value(self, year: int) -> float:
        """G_SC for a calendar year, applying the repeating cycle."""
        if self.gsc_table is None:
            return DEFAULT_GSC
        years = sorted(self.gsc_table)
        if year in self.gsc_table:
            return self.gsc_table[year]
        if year < years[0]:
            raise ValueError(
                f"year {year} precedes the solar-constant table "
                f"(starts {years[0]})")
        mapped = self.cycle_start + (year - self.cycle_start) % self.cycle_length
        if mapped not in self.gsc_table:
            raise ValueError(
                f"cycle year {mapped} (for {year}) missing from gsc_table")
        return self.gsc_table[mapped]


@dataclass(frozen=True)
class SolarGeometry:
    """Sun position terms for one time: angles in radians, distance in au."""

    declination: float
    hour_angle: float
    earth_sun_distance: float
    zenith: float

    def __post_init__(self):
        if not (0.98 <= self.earth_sun_distance <= 1.02):
            raise ValueError(
                f"earth-sun distance {self.earth_sun_distance} au outside "
                "[0.98, 1.02]")
        if not (0.0 <= self.zenith <= np.pi):
            raise ValueError(f"zenith {self.zenith} outside [0, pi]")


def read_gsc_csv(path) -> dict[int, float]:
    """Load an annual solar-constant table from a (year,value) CSV."""
    table = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("year", ""):
                continue
            table[int(row[0])] = float(row[1])
    return table


def _fractional_year(t: datetime, year_days: float) -> float:
    """Years since 1979-01-01 on a fixed-length Gregorian year."""
    t = ensure_utc(t)
    return 1979.0 + (t - _EPOCH).total_seconds() / (86400.0 * year_days)


def solar_constant_at(t: datetime, config: SolarConfig | None = None) -> float:
    """Annual G_SC linearly interpolated at time t (W m-2)."""
    config = config or SolarConfig()
    yf = _fractional_year(t, config.year_days)
    y0 = int(np.floor(yf))
    frac = yf - y0
    g0 = config.annual_value(y0)
    g1 = config.annual_value(y0 + 1)
    return g0 + frac * (g1 - g0)


def sun_ephemeris(t: datetime):
    """Declination (rad), equation of time (min), earth-sun distance (au).

    NOAA solar calculator series: geometric mean longitude and anomaly in
    Julian centuries from J2000, equation of center, apparent longitude
    and mean obliquity.  Declination is good to ~0.01 deg over the
    supported decades.
    """
    t = ensure_utc(t)
    # Julian date (valid for Gregorian dates; no Julian-calendar branch)
    y, m = t.year, t.month
    d = (t.day + t.hour / 24.0 + t.minute / 1440.0 + t.second / 86400.0
         + t.microsecond / 86400e6)
    if m <= 2:
        y -= 1
        m += 12
    a = y // 100
    b = 2 - a + a // 4
    jd = int(365.25 * (y + 4716)) + int(30.6001 * (m + 1)) + d + b - 1524.5
    jc = (jd - 2451545.0) / 36525.0

    # geometric mean longitude and anomaly of the sun (deg)
    gml = (280.46646 + jc * (36000.76983 + jc * 0.0003032)) % 360.0
    gma = 357.52911 + jc * (35999.05029 - 0.0001537 * jc)
    ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc)

    gma_r = np.radians(gma)
    # equation of center (deg)
    ctr = (np.sin(gma_r) * (1.914602 - jc * (0.004817 + 0.000014 * jc))
           + np.sin(2 * gma_r) * (0.019993 - 0.000101 * jc)
           + np.sin(3 * gma_r) * 0.000289)
    stl = gml + ctr            # true longitude (deg)
    sta = gma + ctr            # true anomaly (deg)

    # earth-sun distance (au)
    dist = (1.000001018 * (1 - ecc * ecc)) / (1 + ecc * np.cos(np.radians(sta)))

    # apparent longitude, corrected for nutation/aberration (deg)
    omega = 125.04 - 1934.136 * jc
    sal = stl - 0.00569 - 0.00478 * np.sin(np.radians(omega))

    # mean obliquity of the ecliptic plus nutation correction (deg)
    seconds = 21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))
    moe = 23.0 + (26.0 + seconds / 60.0) / 60.0
    obliq = moe + 0.00256 * np.cos(np.radians(omega))

    obliq_r = np.radians(obliq)
    sal_r = np.radians(sal)
    decl = np.arcsin(np.sin(obliq_r) * np.sin(sal_r))

    # equation of time (minutes)
    vary = np.tan(obliq_r / 2.0) ** 2
    gml_r = np.radians(gml)
    eot = 4.0 * np.degrees(
        vary * np.sin(2 * gml_r)
        - 2 * ecc * np.sin(gma_r)
        + 4 * ecc * vary * np.sin(gma_r) * np.cos(2 * gml_r)
        - 0.5 * vary * vary * np.sin(4 * gml_r)
        - 1.25 * ecc * ecc * np.sin(2 * gma_r))
    return float(decl), float(eot), float(dist)


def _hour_angle(t: datetime, lon, eot_minutes: float):
    """Hour angle (rad) from true solar time; lon in degrees east."""
    t = ensure_utc(t)
    utc_minutes = t.hour * 60.0 + t.minute + t.second / 60.0 + t.microsecond / 6e7
    tst = utc_minutes + eot_minutes + 4.0 * np.asarray(lon, dtype=float)
    ha_deg = tst / 4.0 - 180.0
    return np.radians((ha_deg + 180.0) % 360.0 - 180.0)


def solar_geometry(t: datetime, lat: float, lon: float) -> SolarGeometry:
    """Sun geometry at one time and location; lat/lon in degrees."""
    if abs(lat) > 90.0:
        raise ValueError(f"latitude {lat} outside [-90, 90]")
    decl, eot, dist = sun_ephemeris(t)
    ha = float(_hour_angle(t, lon, eot))
    phi = np.radians(lat)
    cosz = (np.sin(phi) * np.sin(decl)
            + np.cos(phi) * np.cos(decl) * np.cos(ha))
    zen = float(np.arccos(np.clip(cosz, -1.0, 1.0)))
    return SolarGeometry(declination=decl, hour_angle=ha,
                         earth_sun_distance=dist, zenith=zen)


def irradiance_from_geometry(gsc: float, distance_au: float,
                             zenith: float) -> float:
    """max(G_SC * (1/d)^2 * cos(zenith), 0) in W m-2."""
    return max(gsc * np.cos(zenith) / (distance_au * distance_au), 0.0)


def instantaneous_irradiance(t: datetime, lat: float, lon: float,
                             config: SolarConfig | None = None) -> float:
    """Instantaneous top-of-atmosphere irradiance at one point (W m-2)."""
    geo = solar_geometry(t, lat, lon)
    gsc = solar_constant_at(t, config)
    return irradiance_from_geometry(gsc, geo.earth_sun_distance, geo.zenith)


def _minute_irradiance_grid(t: datetime, grid: GridSpec,
                            config: SolarConfig) -> np.ndarray:
    decl, eot, dist = sun_ephemeris(t)
    gsc = solar_constant_at(t, config)
    ha = _hour_angle(t, grid.longitudes, eot)          # (n_lon,)
    phi = np.radians(grid.latitudes)[:, None]          # (n_lat, 1)
    cosz = (np.sin(phi) * np.sin(decl)
            + np.cos(phi) * np.cos(decl) * np.cos(ha)[None, :])
    return np.maximum(gsc / (dist * dist) * cosz, 0.0)


def _hour_accumulation(start: datetime, grid: GridSpec,
                       config: SolarConfig) -> np.ndarray:
    """One hour of minute-sampled irradiance, summed to J m-2."""
    minutes = np.stack([
        _minute_irradiance_grid(start + timedelta(minutes=k), grid, config)
        for k in range(60)])
    return minutes.sum(axis=0) * config.minute_seconds


def accumulated_irradiance(window_start: datetime, window_hours: int,
                           grid: GridSpec,
                           config: SolarConfig | None = None) -> Field:
    """Accumulated irradiance over [start, start + window_hours) in J m-2.

    Sampled at each minute start and summed hour by hour, so a 6-hour
    window equals the sum of its six 1-hour windows bit-exactly.  The
    output field is labeled with the window ending time.
    """
    if window_hours not in (1, 6):
        raise ValueError(f"window_hours must be 1 or 6, got {window_hours}")
    config = config or SolarConfig()
    window_start = ensure_utc(window_start)
    hour_sums = [
        _hour_accumulation(window_start + timedelta(hours=k), grid, config)
        for k in range(window_hours)]
    total = reduce(np.add, hour_sums)
    return Field(grid=grid, values=total, variable="Is",
                 valid_time=window_start + timedelta(hours=window_hours),
                 units="J m-2")
