"""Initial-data menu: smooth bump, sharp spike, seeded random field,
and the sampled heat kernel for the p=2 oracle runs."""

from __future__ import annotations

import numpy as np

from .solver import Grid, gaussian_exact


def bump_field(grid: Grid, center, width, amplitude: float = 1.0, floor: float = 0.0) -> np.ndarray:
    """Product of cosine humps supported in the box center +- width, on a floor.

    Along each axis the profile is cos^2(pi s / 2) for |s| < 1 with
    s = (x - c) / w, so the bump meets the floor with zero slope.
    """
    mesh = grid.nodes()
    out = np.full(grid.dims, float(amplitude))
    for x, c, w in zip(mesh, center, width):
        if not w > 0:
            raise ValueError("bump width must be positive")
        s = (x - c) / w
        out = out * np.where(np.abs(s) < 1.0, np.cos(0.5 * np.pi * s) ** 2, 0.0)
    return out + float(floor)


def spike_field(grid: Grid, amplitude: float = 1.0, cell=None) -> np.ndarray:
    """Single hot cell (Dirac surrogate), zero elsewhere."""
    u = grid.zeros()
    if cell is None:
        cell = tuple(n // 2 for n in grid.dims)
    u[tuple(int(c) for c in cell)] = float(amplitude)
    return u


def random_field(grid: Grid, seed: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Seeded uniform nonnegative field."""
    if low < 0 or high <= low:
        raise ValueError("random field range must satisfy 0 <= low < high")
    rng = np.random.default_rng(int(seed))
    return rng.uniform(low, high, size=grid.dims)


def heat_kernel_field(grid: Grid, t0: float) -> np.ndarray:
    """Heat kernel at physical time t0 sampled at cell centers."""
    return np.asarray(gaussian_exact(grid.nodes(), t0, grid.N))
