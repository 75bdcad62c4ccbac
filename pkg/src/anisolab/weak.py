"""Discrete weak-formulation residual.

For a solution u and a smooth spatially compactly supported test
function phi, the quantity

    int u phi dx |_{t1}^{t2}
      + int int ( -u phi_t + sum_i flux(u_{x_i}) phi_{x_i} ) dx dt

vanishes in the continuum.  Here it is evaluated with midpoint (cell)
quadrature in space, face-centered one-sided differences matching the
solver stencil, and the trapezoid rule in time over the recorded
snapshots, so it shrinks under refinement for genuine solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .solver import GridSolution

__all__ = ["CosineBump", "weak_residual"]


@dataclass(frozen=True)
class CosineBump:
    """Tensor-product cos^2 bump in space, smoothly modulated in time.

    phi(x, t) = (a0 + a1 sin(omega t)) * prod_i b((x_i - c_i)/w_i),
    b(s) = cos^2(pi s / 2) on |s| < 1 and 0 outside.  Compactly
    supported in the box center +- width.
    """

    center: tuple[float, ...]
    width: tuple[float, ...]
    a0: float = 1.0
    a1: float = 0.0
    omega: float = 1.0

    def _profiles(self, X):
        out = []
        for x, c, w in zip(X, self.center, self.width):
            s = (np.asarray(x) - c) / w
            out.append(np.where(np.abs(s) < 1.0, np.cos(0.5 * np.pi * s) ** 2, 0.0))
        return out

    def _amplitude(self, t: float) -> float:
        return self.a0 + self.a1 * math.sin(self.omega * t)

    def value(self, X, t: float):
        out = self._amplitude(t)
        for b in self._profiles(X):
            out = out * b
        return out

    def time_derivative(self, X, t: float):
        out = self.a1 * self.omega * math.cos(self.omega * t)
        for b in self._profiles(X):
            out = out * b
        return out

    def space_derivative(self, X, t: float, axis: int):
        profiles = self._profiles(X)
        c, w = self.center[axis], self.width[axis]
        s = (np.asarray(X[axis]) - c) / w
        db = np.where(np.abs(s) < 1.0, -0.5 * np.pi * np.sin(np.pi * s), 0.0) / w
        out = self._amplitude(t) * db
        for i, b in enumerate(profiles):
            if i != axis:
                out = out * b

        return out


def _phi_on_grid(phi, grid, t: float) -> np.ndarray:
    return np.broadcast_to(np.asarray(phi.value(grid.nodes(), t), dtype=float), grid.dims)


def weak_residual(sol: GridSolution, phi, t1: float, t2: float) -> float:
    """Discrete weak-form residual of sol against phi on [t1, t2].

    t1 and t2 must be snapshot times; phi must vanish on the cells
    adjacent to the spatial boundary.
    """
    times = sol.times
    i1 = int(np.argmin(np.abs(times - t1)))
    i2 = int(np.argmin(np.abs(times - t2)))
    tol = 1e-9 * max(1.0, abs(float(times[-1])))
    if abs(times[i1] - t1) > tol or abs(times[i2] - t2) > tol:
        raise ValueError("t1 and t2 must be snapshot times")
    if not times[i1] < times[i2]:
        raise ValueError("need t1 < t2")

    grid = sol.grid
    ndim = grid.N
    vol = grid.cell_volume

    # compact support check on the boundary cell layer
    phi_end = _phi_on_grid(phi, grid, float(times[i2]))
    scale = max(1.0, float(np.max(np.abs(phi_end))))
    for ax in range(ndim):
        for side in (0, -1):
            sel = [slice(None)] * ndim
            sel[ax] = side
            if np.max(np.abs(phi_end[tuple(sel)])) > 1e-12 * scale:
                raise ValueError("test function is not compactly supported inside the grid")

    qexp = tuple(pi - 2.0 for pi in sol.p.p)
    integrand = np.empty(i2 - i1 + 1)
    for k in range(i1, i2 + 1):
        t = float(times[k])
        u = sol.fields[k]
        mesh = grid.nodes()
        acc = -float(np.sum(u * phi.time_derivative(mesh, t))) * vol
        padded = grid.pad(u, t)
        for ax in range(ndim):
            keep = tuple(slice(1, -1) if a != ax else slice(None) for a in range(ndim))
            du = np.diff(padded[keep], axis=ax) / grid.spacing[ax]
            fl = np.abs(du) ** qexp[ax] * du
            phi_nodes = _phi_on_grid(phi, grid, t)
            dphi = np.diff(phi_nodes, axis=ax) / grid.spacing[ax]
            inner = tuple(
                slice(1, -1) if a == ax else slice(None) for a in range(ndim)
            )
            acc += float(np.sum(fl[inner] * dphi)) * vol
        integrand[k - i1] = acc

    boundary = float(
        np.sum(sol.fields[i2] * _phi_on_grid(phi, grid, float(times[i2])))
        - np.sum(sol.fields[i1] * _phi_on_grid(phi, grid, float(times[i1])))
    ) * vol
    time_integral = float(np.trapezoid(integrand, times[i1 : i2 + 1]))
    return boundary + time_integral
