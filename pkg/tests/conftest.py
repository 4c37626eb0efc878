from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from spherecast import make_gaussian_grid
from spherecast.grid import FieldSeries

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def grid16():
    return make_gaussian_grid(16, 32)


@pytest.fixture(scope="session")
def grid32():
    return make_gaussian_grid(32, 64)


@pytest.fixture(scope="session")
def grid64():
    return make_gaussian_grid(64, 128)


def make_series(grid, variable="T", level="single", n_time=4, step_hours=6,
                seed=0, start=T0, values=None):
    """Random FieldSeries on the given grid, deterministic per seed."""
    rng = np.random.default_rng(seed)
    if values is None:
        values = rng.normal(size=(n_time,) + grid.shape)
    times = [start + timedelta(hours=step_hours * k) for k in range(n_time)]
    return FieldSeries(grid, variable, level, times, values)


def make_spectrum_fixture(path):
    """Deterministic 2-time, 1-variable container for the spectrum golden test.

    Written as f64 so the committed golden values are exact to the
    independent oracle that produced them.
    """
    from spherecast.container import write_container

    grid = make_gaussian_grid(16, 32)
    series = make_series(grid, "Z500", "single", n_time=2, seed=2024)
    write_container({series.key: series}, path, dtype="f64")
    return grid, series
