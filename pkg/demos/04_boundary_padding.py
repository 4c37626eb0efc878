#!/usr/bin/env python
# Spherical boundary padding: circular dateline wrap, rotated polar rows.
#
# A lat-lon array has artificial edges at the dateline and the poles.  The
# padding extends it so windowed operators see the sphere's true topology:
# columns wrap circularly east-west, and polar rows are rolled 180 degrees
# and reflected, because walking over the pole lands you on the meridian
# on the opposite side.

import numpy as np

from spherecast import make_gaussian_grid
from spherecast.padding import PadSpec, pad, unpad

# Integer cell IDs make the data movement visible
f = np.arange(4 * 8, dtype=int).reshape(4, 8).astype(float)
print("original 4x8 field:")
print(f.astype(int))

spec = PadSpec(pad_ns=1, pad_ew=2)
out = pad(f, spec)
print("\npadded to", out.shape, "(pad_ns=1, pad_ew=2):")
print(out.astype(int))
print("\nnote: top row is the first row rolled by n_lon/2 = 4, and the")
print("left/right columns are wrapped from the opposite edge.")

# Round trip is bit-exact
assert np.array_equal(unpad(out, spec), f)
print("unpad(pad(x)) == x:", True)

# A smooth function on the sphere stays smooth across the padded pole
grid = make_gaussian_grid(64, 128)
lat = np.radians(grid.latitudes)[:, None]
lon = np.radians(grid.longitudes)[None, :]
smooth = np.cos(lat) * np.cos(lon)          # the Cartesian x coordinate
padded = pad(smooth, PadSpec(pad_ns=1, pad_ew=0))
jump_pole = np.abs(padded[1] - padded[0]).max()
jump_interior = np.abs(smooth[1] - smooth[0]).max()
print(f"\nmax jump across padded pole: {jump_pole:.5f}  "
      f"(interior meridional jump {jump_interior:.5f}, ratio "
      f"{jump_pole / jump_interior:.2f} <= 2)")
