#!/usr/bin/env python
# Verification: latitude-weighted RMSE and ACC with bootstrap intervals,
# the Murphy skill/ACC consistency check, and spatial correlation matrices.

from datetime import datetime, timedelta, timezone

import numpy as np

from spherecast import make_gaussian_grid
from spherecast.grid import Field, FieldSeries
from spherecast.preprocess import Climatology
from spherecast.verify import (ForecastSet, acc, rmse,
                               skill_relation_check, spatial_correlation,
                               average_correlations, correlation_difference)

grid = make_gaussian_grid(32, 64)
t0 = datetime(2020, 1, 1, tzinfo=timezone.utc)
rng = np.random.default_rng(0)

# Build a toy truth, a damped-forecast model, and a zero climatology
n_init, n_lead = 20, 4
times = [t0 + timedelta(hours=6 * k) for k in range(n_init + n_lead)]
truth = rng.normal(size=(len(times),) + grid.shape)
key = ("Z500", "single")
target = {key: FieldSeries(grid, "Z500", "single", times, truth)}
clim = Climatology(grid=grid, hours=[0, 6, 12, 18], window_days=61,
                   std_days=10.0,
                   data={key: np.zeros((365, 4) + grid.shape)})

forecasts = {}
for i in range(n_init):
    vtimes = [times[i] + timedelta(hours=6 * k) for k in range(n_lead + 1)]
    # forecast = damped truth + growing noise, a crude error model
    vals = np.stack([
        (0.95 ** k) * truth[i + k]
        + 0.1 * k * rng.normal(size=grid.shape)
        for k in range(n_lead + 1)])
    forecasts[times[i]] = {key: FieldSeries(grid, "Z500", "single", vtimes,
                                            vals)}

fs = ForecastSet(forecasts, target, climatology=clim)

print("lead   RMSE [95% CI]            ACC [95% CI]")
for lead in (0, 6, 12, 18, 24):
    r = rmse(fs, "Z500", lead_hours=lead, n_boot=1000, seed=0)
    a = acc(fs, "Z500", lead_hours=lead, n_boot=1000, seed=0)
    print(f"{lead:4d}h  {r.summary.mean:.3f} [{r.summary.ci_low:.3f}, "
          f"{r.summary.ci_high:.3f}]   {a.summary.mean:.3f} "
          f"[{a.summary.ci_low:.3f}, {a.summary.ci_high:.3f}]")

# The skill score 1 - MSE/MSE_C tracks 2 ACC - 1 when variances match
rel = skill_relation_check(fs, "Z500", lead_hours=12)
print("\nskill relation at 12h: mean residual",
      round(float(rel.residual.mean()), 4),
      "(uncorrected arrangement:", round(float(rel.printed_residual.mean()), 3),
      ")")

# Spatial correlation between variables, averaged over times
mats = []
for i in range(5):
    base = rng.normal(size=grid.shape)
    fields = [
        Field(grid=grid, values=base, variable="T", level="L5"),
        Field(grid=grid, values=0.8 * base + 0.6 * rng.normal(size=grid.shape),
              variable="Q", level="L5"),
        Field(grid=grid, values=rng.normal(size=grid.shape), variable="U",
              level="L5"),
    ]
    mats.append(spatial_correlation(fields))
mean = average_correlations(mats)
print("\nmean spatial correlation matrix over 5 times:")
print(np.round(mean.values, 3))
print("difference from itself (diagonal pinned to 0):")
print(correlation_difference(mean, mean))
