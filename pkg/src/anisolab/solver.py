"""Conservative explicit finite-difference solver for the anisotropic
degenerate diffusion equation u_t = sum_i d/dx_i(|u_{x_i}|^(p_i-2) u_{x_i}).

Cell-centered uniform grids, fluxes on faces from one-sided differences,
explicit Euler with an adaptive CFL step.  Mass is conserved exactly
(up to rounding) for periodic and zero-flux closures, and the update is
monotone under the stability bound, so nonnegative data stays
nonnegative and comparison between ordered fields is preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import DomainBox, PowerVector
from .kernels import max_face_gradients, step_update

__all__ = [
    "Grid",
    "GridSolution",
    "RunLog",
    "InstabilityError",
    "flux",
    "stable_dt",
    "step",
    "solve",
    "gaussian_exact",
    "sample_heat_kernel",
]

_BC_NAMES = ("periodic", "zero_flux", "dirichlet")

DirichletData = "float | Callable[[tuple[np.ndarray, ...], float], np.ndarray]"


class InstabilityError(RuntimeError):
    """Raised when the run produces non-finite values or loses positivity."""

    def __init__(self, message: str, step_index: int, max_abs: float):
        super().__init__(f"{message} (step {step_index}, max|u|={max_abs:.6g})")
        self.step_index = step_index
        self.max_abs = max_abs


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered rectangular grid with a boundary closure.

    bc is one of "periodic", "zero_flux", "dirichlet"; Dirichlet data is
    either a constant or a callable g(X, t) evaluated at ghost-cell
    centers (X is a tuple of coordinate arrays).
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    bc: str = "periodic"
    dirichlet: object = None

    def __post_init__(self):
        if len(self.dims) != len(self.spacing) or len(self.dims) != len(self.origin):
            raise ValueError("dims/spacing/origin length mismatch")
        for n in self.dims:
            if int(n) != n or n < 3:
                raise ValueError(f"grid needs at least 3 cells per axis, got {n}")
        for h in self.spacing:
            if not h > 0:
                raise ValueError(f"nonpositive grid spacing {h}")
        if self.bc not in _BC_NAMES:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.bc == "dirichlet" and self.dirichlet is None:
            raise ValueError("dirichlet closure requires boundary data")

    @property
    def N(self) -> int:
        return len(self.dims)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def axis_nodes(self, i: int) -> np.ndarray:
        """Cell-center coordinates along axis i."""
        return self.origin[i] + (np.arange(self.dims[i]) + 0.5) * self.spacing[i]

    def nodes(self) -> tuple[np.ndarray, ...]:
        """Sparse meshgrid of cell centers (broadcastable)."""
        axes = [self.axis_nodes(i) for i in range(self.N)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))

    def bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        lo = tuple(self.origin)
        hi = tuple(o + n * h for o, n, h in zip(self.origin, self.dims, self.spacing))
        return lo, hi

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dims, dtype=np.float64)

    def pad(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Field with one ghost layer per side, closed per the bc."""
        if u.shape != self.dims:
            raise ValueError(f"field shape {u.shape} does not match grid dims {self.dims}")
        if self.bc == "periodic":
            return np.pad(u, 1, mode="wrap")
        if self.bc == "zero_flux":
            return np.pad(u, 1, mode="edge")
        padded = np.pad(u, 1, mode="edge")
        g = self.dirichlet
        for ax in range(self.N):
            for side, ghost_x in ((0, self.origin[ax] - 0.5 * self.spacing[ax]),
                                  (-1, self.origin[ax] + (self.dims[ax] + 0.5) * self.spacing[ax])):
                sel = [slice(1, -1)] * self.N
                sel[ax] = side
                if callable(g):
                    coords = [self.axis_nodes(i) for i in range(self.N)]
                    coords[ax] = np.array([ghost_x])
                    mesh = np.meshgrid(*coords, indexing="ij", sparse=True)
                    vals = np.broadcast_to(
                        np.asarray(g(tuple(mesh), t), dtype=np.float64),
                        tuple(1 if i == ax else self.dims[i] for i in range(self.N)),
                    )
                    padded[tuple(sel)] = np.squeeze(vals, axis=ax)
                else:
                    padded[tuple(sel)] = float(g)
        return padded


@dataclass
class RunLog:
    """Per-run diagnostics collected by solve()."""

    dt_history: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)
    snapshot_mass: list = field(default_factory=list)
    snapshot_min: list = field(default_factory=list)
    snapshot_max: list = field(default_factory=list)
    steps: int = 0

    def record_snapshot(self, t: float, u: np.ndarray, cell_volume: float) -> None:
        self.snapshot_times.append(float(t))
        self.snapshot_mass.append(float(u.sum() * cell_volume))
        self.snapshot_min.append(float(u.min()))
        self.snapshot_max.append(float(u.max()))

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "dt_history": self.dt_history,
            "snapshot_times": self.snapshot_times,
            "snapshot_mass": self.snapshot_mass,
            "snapshot_min": self.snapshot_min,
            "snapshot_max": self.snapshot_max,
        }


@dataclass(frozen=True)
class GridSolution:
    """Discrete space-time trajectory: one field per snapshot time."""

    grid: Grid
    p: PowerVector
    times: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        fields = np.asarray(self.fields, dtype=np.float64)
        if times.ndim != 1 or len(times) < 1:
            raise ValueError("need at least one snapshot time")
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if fields.shape != (len(times),) + self.grid.dims:
            raise ValueError("snapshot stack shape does not match grid/times")
        if not np.all(np.isfinite(fields)):
            raise ValueError("snapshots contain non-finite values")
        if self.p.N != self.grid.N:
            raise ValueError("exponent vector dimension does not match grid")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", fields)

    @property
    def n_snapshots(self) -> int:
        return len(self.times)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.fields)))

    def node_hull(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Spatial hull spanned by cell centers (interpolation is defined here)."""
        lo = tuple(self.grid.axis_nodes(i)[0] for i in range(self.grid.N))
        hi = tuple(self.grid.axis_nodes(i)[-1] for i in range(self.grid.N))
        return lo, hi

    def time_hull(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def domain_box(self) -> DomainBox:
        """The grid box over the recorded time window, as a DomainBox."""
        lo, hi = self.grid.bounds()
        return DomainBox(lo, hi, T=float(self.times[-1]), t_start=float(self.times[0]))


def flux(s, p_i: float):
    """Directional flux |s|^(p_i-2) * s; odd, monotone, flux(0) = 0."""
    s = np.asarray(s, dtype=np.float64)
    out = np.abs(s) ** (p_i - 2.0) * s
    if out.ndim == 0:
        return float(out)
    return out


def _default_dt_max(grid: Grid) -> float:
    return min(h * h for h in grid.spacing)


def stable_dt(
    u: np.ndarray,
    grid: Grid,
    p: PowerVector,
    safety: float = 0.9,
    dt_max: float | None = None,
    t: float = 0.0,
) -> float:
    """Largest explicit step: safety / sum_i 2*(p_i-1)*max|D_i u|^(p_i-2) / h_i^2.

    Flat fields have no stiffness, so the step is capped at dt_max
    (default min_i h_i^2).
    """
    if not 0 < safety <= 1:
        raise ValueError("safety factor must be in (0, 1]")
    cap = _default_dt_max(grid) if dt_max is None else float(dt_max)
    padded = grid.pad(u, t)
    grads = max_face_gradients(padded, grid.spacing)
    if np.all(grads == 0.0):
        return cap
    denom = 0.0
    for g, pi, h in zip(grads, p.p, grid.spacing):
        a = (pi - 1.0) * g ** (pi - 2.0)
        denom += 2.0 * a / (h * h)
    return min(safety / denom, cap)


def _stability_denominator(padded: np.ndarray, grid: Grid, p: PowerVector) -> float:
    grads = max_face_gradients(padded, grid.spacing)
    denom = 0.0
    for g, pi, h in zip(grads, p.p, grid.spacing):
        denom += 2.0 * (pi - 1.0) * g ** (pi - 2.0) / (h * h)
    return denom


def step(
    u: np.ndarray,
    dt: float,
    grid: Grid,
    p: PowerVector,
    t: float = 0.0,
    check_stability: bool = True,
) -> np.ndarray:
    """One explicit conservative update; refuses dt beyond the stability bound."""
    if p.N != grid.N:
        raise ValueError("exponent vector dimension does not match grid")
    if dt < 0:
        raise ValueError("negative time step")
    padded = grid.pad(np.asarray(u, dtype=np.float64), t)
    if check_stability:
        denom = _stability_denominator(padded, grid, p)
        if denom > 0.0 and dt * denom > 1.0 + 1e-9:
            raise ValueError(
                f"dt={dt:.6g} exceeds the stability bound {1.0 / denom:.6g}"
            )
    qexp = tuple(pi - 2.0 for pi in p.p)
    return step_update(padded, np.asarray(u, dtype=np.float64), dt, grid.spacing, qexp)


def solve(
    u0: np.ndarray,
    T: float,
    grid: Grid,
    p: PowerVector,
    snapshot_times: Sequence[float] | None = None,
    safety: float = 0.9,
    dt_max: float | None = None,
    log: RunLog | None = None,
    max_steps: int = 20_000_000,
) -> GridSolution:
    """Advance u0 to time T with adaptive stable steps, recording snapshots.

    The step is recomputed every iteration and clipped so the trajectory
    lands exactly on each requested snapshot time.  Non-finite values or
    loss of positivity (for nonnegative data under a sign-preserving
    closure) abort the run with a diagnostic.
    """
    u = np.asarray(u0, dtype=np.float64).copy()
    if u.shape != grid.dims:
        raise ValueError("initial field shape does not match grid")
    if not np.all(np.isfinite(u)):
        raise ValueError("initial field contains non-finite values")
    if T < 0:
        raise ValueError("negative time horizon")

    if snapshot_times is None:
        wanted = [0.0, T] if T > 0 else [0.0]
    else:
        wanted = sorted(set(float(s) for s in snapshot_times))
    if not wanted:
        raise ValueError("empty snapshot list")
    if wanted[0] < 0.0 or wanted[-1] > T + 1e-12 * max(T, 1.0):
        raise ValueError("snapshot times must lie inside [0, T]")

    track_nonneg = bool(u.min() >= 0.0)
    qexp = tuple(pi - 2.0 for pi in p.p)
    cap = _default_dt_max(grid) if dt_max is None else float(dt_max)
    cell_volume = grid.cell_volume

    records = []
    pending = list(wanted)
    t = 0.0
    if pending and pending[0] == 0.0:
        records.append(u.copy())
        if log is not None:
            log.record_snapshot(0.0, u, cell_volume)
        pending.pop(0)

    n_steps = 0
    scale = max(1.0, float(np.max(np.abs(u))))
    while pending:
        target = pending[0]
        while t < target:
            padded = grid.pad(u, t)
            if track_nonneg and padded.min() < 0.0:
                track_nonneg = False
            denom = _stability_denominator(padded, grid, p)
            dt = cap if denom == 0.0 else min(safety / denom, cap)
            lands = t + dt >= target
            if lands:
                dt = target - t
            u = step_update(padded, u, dt, grid.spacing, qexp)
            t = target if lands else t + dt
            n_steps += 1
            m = float(np.max(np.abs(u)))
            if not math.isfinite(m):
                raise InstabilityError("non-finite values in the field", n_steps, m)
            if track_nonneg and u.min() < -1e-12 * max(scale, m):
                raise InstabilityError("positivity lost", n_steps, m)
            scale = max(scale, m)
            if log is not None:
                log.dt_history.append(float(dt))
            if n_steps > max_steps:
                raise InstabilityError("step budget exhausted", n_steps, m)
        records.append(u.copy())
        if log is not None:
            log.record_snapshot(t, u, cell_volume)
        pending.pop(0)

    if log is not None:
        log.steps = n_steps
    return GridSolution(grid, p, np.asarray(wanted), np.stack(records))


def gaussian_exact(x: Sequence[float], t: float, N: int | None = None):
    """Free-space heat kernel (4 pi t)^(-N/2) exp(-|x|^2 / (4t)), t > 0.

    Coordinates may be scalars or broadcastable arrays.
    """
    if not t > 0:
        raise ValueError("heat kernel requires t > 0")
    coords = list(x)
    if N is None:
        N = len(coords)
    elif N != len(coords):
        raise ValueError("dimension N does not match point length")
    sq = sum(np.asarray(c, dtype=np.float64) ** 2 for c in coords)
    out = (4.0 * math.pi * t) ** (-N / 2.0) * np.exp(-sq / (4.0 * t))
    if np.ndim(out) == 0:
        return float(out)
    return out


def sample_heat_kernel(grid: Grid, times: Sequence[float], t_offset: float = 0.0) -> GridSolution:
    """Exact heat-kernel trajectory sampled on the grid (oracle solution).

    Snapshot at time t holds the kernel at physical time t + t_offset,
    which must stay positive.
    """
    mesh = grid.nodes()
    times = np.asarray(sorted(float(t) for t in times))
    fields = np.stack([gaussian_exact(mesh, t + t_offset, grid.N) for t in times])
    p = PowerVector([2.0] * grid.N)
    return GridSolution(grid, p, times, fields)
