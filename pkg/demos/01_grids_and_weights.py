#!/usr/bin/env python
# Global grid geometry: Gaussian quadrature latitudes and verification weights.
#
# The N320 regular Gaussian grid (640 x 1280) is the workhorse resolution;
# its latitudes sit on Gauss-Legendre nodes so spectral transforms integrate
# exactly, while verification uses plain cos(latitude) weights normalized to
# unit mean.

import numpy as np

from spherecast import make_gaussian_grid, make_equiangular_grid, metric_weights

# A small Gaussian grid to look at by eye
grid = make_gaussian_grid(8, 16)
print("Gaussian 8x16 latitudes (deg, north to south):")
print(np.round(grid.latitudes, 3))
print("quadrature weights (sum = 2):", np.round(grid.quad_weights, 4),
      "->", grid.quad_weights.sum())

# The full N320 grid: ~0.28 deg spacing near the equator
n320 = make_gaussian_grid(640, 1280)
print("\nN320 grid:", n320.shape, "spacing near equator:",
      round(abs(n320.latitudes[319] - n320.latitudes[320]), 4), "deg")

# Verification weights have unit mean, so a uniform bias c scores RMSE = |c|
w = metric_weights(n320)
print("metric weights: mean =", w.mean(), " max at rows",
      np.argsort(w)[-2:], "(the two rows nearest the equator)")

# Equiangular grids put rows on cell centers and exclude the poles
eq = make_equiangular_grid(4, 8)
print("\nequiangular 4x8 latitudes:", eq.latitudes)
print("weights proportional to cos(lat):", np.round(metric_weights(eq), 4))
