"""Global gridded-field toolkit for atmospheric model pipelines.

Covers the non-neural parts of a global forecast workflow: Gaussian and
equiangular grids, bit-exact gridded containers, z-score plus residual
normalization, top-of-atmosphere solar forcing, spherical boundary padding,
polar/diffusion smoothing, spherical-harmonic spectra, latitude-weighted
verification scores with bootstrap intervals, and an autoregressive
rollout harness.
"""

from .grid import (
    GridSpec,
    Field,
    FieldSeries,
    make_gaussian_grid,
    make_equiangular_grid,
    metric_weights,
    cosine_weights,
    VARIABLES,
)
from .container import read_container, write_container

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "Field",
    "FieldSeries",
    "make_gaussian_grid",
    "make_equiangular_grid",
    "metric_weights",
    "cosine_weights",
    "VARIABLES",
    "read_container",
    "write_container",
    "__version__",
]
