#!/usr/bin/env python
# Smoothing operators: explicit Laplacian diffusion and the zonal pole filter.
#
# Both target the high-frequency artifacts that creep into autoregressive
# forecasts.  Diffusion damps every scale in proportion to l(l+1); the pole
# filter removes only zonal wavenumbers that outrun the physical resolution
# of the shrinking latitude circles near the poles.

import numpy as np

from spherecast import make_gaussian_grid
from spherecast.filters import (DiffusionSpec, PoleFilterSpec, diffuse_values,
                                diffusion_stability_bound, pole_filter_values)
from spherecast.sht import HarmonicCoeffs, SphericalHarmonicTransform

grid = make_gaussian_grid(24, 48)
nu_dt = diffusion_stability_bound(grid)
print(f"grid 24x48: largest stable diffusion number nu_dt = {nu_dt:.2e}")

# Spherical harmonics decay like (1 - nu_dt l (l+1))^steps
t = SphericalHarmonicTransform(grid, grid.n_lat - 1)
spec = DiffusionSpec(nu_dt=nu_dt, steps=10)
print("\neigenmode decay after 10 steps (measured vs heat-kernel predicted):")
for l in (2, 5, 10):
    a = np.zeros((grid.n_lat, grid.n_lat), complex)
    a[l, l // 2] = 1.0
    f = t.synthesize(HarmonicCoeffs(a, grid.n_lat - 1))
    out = diffuse_values(f, grid, spec)
    measured = abs(t.analyze(out).values[l, l // 2])
    predicted = (1 - nu_dt * l * (l + 1)) ** 10
    print(f"  l={l:2d}: {measured:.4f} vs {predicted:.4f}")

# The weighted global mean is untouched by diffusion
rng = np.random.default_rng(0)
noisy = rng.normal(size=grid.shape) + 2.0
w = grid.quad_weights[:, None]
smoothed = diffuse_values(noisy, grid, spec)
print("\nglobal mean before:", (w * noisy).sum() / (2 * grid.n_lon),
      "after:", (w * smoothed).sum() / (2 * grid.n_lon))
print("variance before:", round((w * noisy**2).sum() / (2 * grid.n_lon), 4),
      "after:", round((w * smoothed**2).sum() / (2 * grid.n_lon), 4))

# Pole filter: a wave that fits at 60N is far beyond Nyquist at 85N
lon = np.radians(grid.longitudes)
f = np.zeros(grid.shape)
i85 = int(np.argmin(np.abs(grid.latitudes - 85.0)))
i45 = int(np.argmin(np.abs(grid.latitudes - 45.0)))
f[i85] = np.cos(20 * lon)
f[i45] = np.cos(20 * lon)
out = pole_filter_values(f, grid, PoleFilterSpec(start_lat=70.0))
print(f"\npole filter (start 70 deg): wave amplitude at 85N "
      f"{np.abs(out[i85]).max():.2e}, at 45N {np.abs(out[i45]).max():.2f}")
print("(the polar copy is removed, the mid-latitude copy passes)")
