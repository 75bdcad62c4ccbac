"""Empirical intrinsic Harnack estimates on computed solutions.

For a sample point (x0, t0) with u(x0, t0) > 0 and an intrinsic
parameter theta = c / u(x0, t0), the forward ratio compares u(x0, t0)
against the infimum of u over the anisotropic cube at the intrinsic
waiting time t0 + theta^(2-pbar) rho^pbar, and the backward ratio the
supremum at the matching earlier time.  Sweeping samples and radii gives
empirical candidates for the constant gamma.

Containment of the radius-4rho cylinder is the theorem's hypothesis; it
is always recorded, and by default samples violating it are censored.
Sweeps may instead run with require_fit=False, in which case a sample is
evaluated whenever the needed data lies inside the solution hull and the
hypothesis flag is kept as metadata.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DomainBox, IntrinsicCylinder, PowerVector, cylinder_fits, make_cylinder
from .solver import GridSolution

__all__ = [
    "HarnackSample",
    "HarnackReport",
    "SampleSpec",
    "CensoredSampleError",
    "EmptyReportError",
    "eval_at",
    "eval_many",
    "time_slice",
    "cube_extrema",
    "forward_ratio",
    "backward_ratio",
    "sample_point",
    "two_sided_check",
    "implied_backward_constants",
    "estimate_constants",
]


class CensoredSampleError(ValueError):
    """A ratio evaluation hit one of the censoring conditions."""


class EmptyReportError(RuntimeError):
    """A sweep produced no admissible sample at all."""


# ----------------------------------------------------------------------
# interpolation


def _locate(axis_nodes: np.ndarray, x: float) -> tuple[int, float]:
    """Index and fraction for linear interpolation along one axis."""
    n = len(axis_nodes)
    h = axis_nodes[1] - axis_nodes[0]
    s = (x - axis_nodes[0]) / h
    if s < -1e-9 or s > n - 1 + 1e-9:
        raise ValueError("query point outside the node hull")
    s = min(max(s, 0.0), float(n - 1))
    j = int(math.floor(s))
    frac = s - j
    if frac < 1e-12:
        frac = 0.0
    elif frac > 1.0 - 1e-12:
        j += 1
        frac = 0.0
    if j >= n - 1:
        j, frac = n - 2, 1.0
    return j, frac


def _time_weights(times: np.ndarray, t: float) -> tuple[int, int, float]:
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError("query time outside the snapshot hull")
    k = int(np.searchsorted(times, t))
    if k == 0:
        return 0, 0, 0.0
    if k >= len(times):
        return len(times) - 1, len(times) - 1, 0.0
    t0, t1 = times[k - 1], times[k]
    w = (t - t0) / (t1 - t0)
    if w < 1e-12:
        return k - 1, k - 1, 0.0
    if w > 1.0 - 1e-12:
        return k, k, 0.0
    return k - 1, k, w


def time_slice(sol: GridSolution, t: float) -> np.ndarray:
    """Field at time t, linearly interpolated between snapshots."""
    k0, k1, w = _time_weights(sol.times, t)
    if k0 == k1:
        return sol.fields[k0]
    return (1.0 - w) * sol.fields[k0] + w * sol.fields[k1]


def eval_at(sol: GridSolution, x: Sequence[float], t: float) -> float:
    """Multilinear interpolation in space, linear in time."""
    f = time_slice(sol, t)
    grid = sol.grid
    idx, frac = [], []
    for i in range(grid.N):
        j, w = _locate(grid.axis_nodes(i), float(x[i]))
        idx.append(j)
        frac.append(w)
    value = 0.0
    for corner in itertools.product((0, 1), repeat=grid.N):
        weight = 1.0
        pos = []
        for i, b in enumerate(corner):
            weight *= frac[i] if b else 1.0 - frac[i]
            pos.append(idx[i] + b)
        if weight != 0.0:
            value += weight * float(f[tuple(pos)])
    return value


def eval_many(sol: GridSolution, points: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Vectorized eval_at for points (n, N) at matching times (n,)."""
    points = np.asarray(points, dtype=float)
    times = np.asarray(times, dtype=float)
    out = np.empty(len(points))
    for k in range(len(points)):
        out[k] = eval_at(sol, points[k], float(times[k]))
    return out


# ----------------------------------------------------------------------
# extrema over the anisotropic cube


def cube_extrema(sol: GridSolution, center, halfwidths, t: float) -> tuple[float, float, int]:
    """(min, max, node_count) of u over the cube at time t.

    Uses all grid nodes inside the closed cube; when fewer than 2^N fall
    inside, the cube corners are added by interpolation so small cubes
    remain measurable.
    """
    grid = sol.grid
    f = time_slice(sol, t)
    sel = []
    count = 1
    for i in range(grid.N):
        nodes = grid.axis_nodes(i)
        h = grid.spacing[i]
        lo = center[i] - halfwidths[i]
        hi = center[i] + halfwidths[i]
        j0 = int(math.ceil((lo - nodes[0]) / h - 1e-12))
        j1 = int(math.floor((hi - nodes[0]) / h + 1e-12))
        j0 = max(j0, 0)
        j1 = min(j1, len(nodes) - 1)
        if j0 > j1:
            count = 0
            break
        sel.append(slice(j0, j1 + 1))
        count *= j1 - j0 + 1
    values = []
    if count > 0:
        block = f[tuple(sel)]
        values.append((float(block.min()), float(block.max())))
    if count < 2**grid.N:
        node_lo, node_hi = sol.node_hull()
        for corner in itertools.product((-1.0, 1.0), repeat=grid.N):
            x = [center[i] + corner[i] * halfwidths[i] for i in range(grid.N)]
            clipped = [min(max(x[i], node_lo[i]), node_hi[i]) for i in range(grid.N)]
            v = eval_at(sol, clipped, t)
            values.append((v, v))
    if not values:
        raise CensoredSampleError("empty cube: no grid node inside")
    return min(v[0] for v in values), max(v[1] for v in values), count


# ----------------------------------------------------------------------
# samples


@dataclass
class HarnackSample:
    """One (x0, t0, rho, c) evaluation; ratio fields are None when the
    direction was not evaluated or was censored."""

    x0: tuple[float, ...]
    t0: float
    u0: float
    rho: float
    c: float
    theta: float
    forward_inf: float | None = None
    forward_ratio: float | None = None
    backward_sup: float | None = None
    backward_ratio: float | None = None
    fits_domain: bool = False
    censored_reason: str | None = None


def _threshold(sol: GridSolution, threshold_rel: float) -> float:
    return threshold_rel * sol.max_abs()


def _cube_inside_hull(sol: GridSolution, center, halfwidths, t: float) -> bool:
    node_lo, node_hi = sol.node_hull()
    t_lo, t_hi = sol.time_hull()
    if t < t_lo - 1e-12 or t > t_hi + 1e-12:
        return False
    for c, h, a, b in zip(center, halfwidths, node_lo, node_hi):
        if c - h < a - 1e-12 or c + h > b + 1e-12:
            return False
    return True


def _base_sample(sol, x0, t0, rho, c, threshold_rel) -> HarnackSample:
    if not rho > 0:
        raise ValueError("rho must be positive")
    if not c > 0:
        raise ValueError("c must be positive")
    u0 = eval_at(sol, x0, t0)
    sample = HarnackSample(tuple(float(v) for v in x0), float(t0), u0, float(rho), float(c), math.nan)
    thr = _threshold(sol, threshold_rel)
    if not u0 > thr:
        sample.censored_reason = "below threshold"
        return sample
    sample.theta = c / u0
    return sample


def _direction(
    sol: GridSolution,
    sample: HarnackSample,
    direction: str,
    domain: DomainBox | None,
    require_fit: bool,
) -> None:
    """Fill one direction of a sample in place (censoring via reason)."""
    p = sol.p
    kind = "forward" if direction == "forward" else "backward"
    cyl4 = make_cylinder((sample.x0, sample.t0), 4.0 * sample.rho, sample.theta, kind, p)
    dom = domain if domain is not None else sol.domain_box()
    fits = cylinder_fits(cyl4, dom)
    sample.fits_domain = fits
    if require_fit and not fits:
        sample.censored_reason = f"{direction} cylinder of radius 4rho does not fit the domain"
        return
    cyl = make_cylinder((sample.x0, sample.t0), sample.rho, sample.theta, kind, p)
    te = sample.t0 + cyl.time_length if direction == "forward" else sample.t0 - cyl.time_length
    if not _cube_inside_hull(sol, sample.x0, cyl.halfwidths, te):
        sample.censored_reason = f"{direction} evaluation outside the solution hull"
        return
    lo, hi, _ = cube_extrema(sol, sample.x0, cyl.halfwidths, te)
    if direction == "forward":
        sample.forward_inf = lo
        if lo <= 0.0:
            sample.censored_reason = "infimum zero: ratio unbounded"
            return
        sample.forward_ratio = sample.u0 / lo
    else:
        sample.backward_sup = hi
        sample.backward_ratio = hi / sample.u0


def forward_ratio(
    sol: GridSolution,
    x0,
    t0: float,
    rho: float,
    c: float,
    threshold_rel: float = 1e-6,
    domain: DomainBox | None = None,
    require_fit: bool = True,
) -> HarnackSample:
    """Forward intrinsic ratio u(x0,t0) / inf over the cube at the waiting time."""
    sample = _base_sample(sol, x0, t0, rho, c, threshold_rel)
    if sample.censored_reason is None:
        _direction(sol, sample, "forward", domain, require_fit)
    return sample


def backward_ratio(
    sol: GridSolution,
    x0,
    t0: float,
    rho: float,
    c: float,
    threshold_rel: float = 1e-6,
    domain: DomainBox | None = None,
    require_fit: bool = True,
) -> HarnackSample:
    """Backward intrinsic ratio sup over the cube at the earlier time / u(x0,t0)."""
    sample = _base_sample(sol, x0, t0, rho, c, threshold_rel)
    if sample.censored_reason is None:
        _direction(sol, sample, "backward", domain, require_fit)
    return sample


def sample_point(
    sol: GridSolution,
    x0,
    t0: float,
    rho: float,
    c: float,
    threshold_rel: float = 1e-6,
    domain: DomainBox | None = None,
    require_fit: bool = True,
) -> HarnackSample:
    """Both directions merged into one sample row."""
    fwd = forward_ratio(sol, x0, t0, rho, c, threshold_rel, domain, require_fit)
    bwd = backward_ratio(sol, x0, t0, rho, c, threshold_rel, domain, require_fit)
    merged = fwd
    merged.backward_sup = bwd.backward_sup
    merged.backward_ratio = bwd.backward_ratio
    merged.fits_domain = fwd.fits_domain and bwd.fits_domain
    reasons = [r for r in (fwd.censored_reason, bwd.censored_reason) if r]
    merged.censored_reason = "; ".join(dict.fromkeys(reasons)) if reasons else None
    return merged


def implied_backward_constants(gamma: float, p: PowerVector) -> dict[str, float]:
    """Constants transferred from the one-sided estimate to the two-sided one.

    gamma_two_sided = 2*gamma^2 and radius_rescale = (2*gamma)^((pbar-2)/pbar).
    """
    if gamma < 1.0:
        raise ValueError("gamma must be >= 1")
    pbar = p.pbar
    return {
        "gamma_two_sided": 2.0 * gamma * gamma,
        "radius_rescale": (2.0 * gamma) ** ((pbar - 2.0) / pbar),
    }


def two_sided_check(
    sol: GridSolution,
    x0,
    t0: float,
    rho: float,
    c: float,
    gamma: float,
    threshold_rel: float = 1e-6,
    domain: DomainBox | None = None,
    require_fit: bool = True,
) -> bool:
    """True iff backward_sup <= gamma*u(x0,t0) and u(x0,t0) <= gamma*forward_inf.

    The containment hypothesis is checked on the centered cylinder of
    radius 4*rho.  Censored evaluations raise CensoredSampleError.
    """
    sample = _base_sample(sol, x0, t0, rho, c, threshold_rel)
    if sample.censored_reason is not None:
        raise CensoredSampleError(sample.censored_reason)
    cyl4 = make_cylinder((sample.x0, sample.t0), 4.0 * rho, sample.theta, "centered", sol.p)
    dom = domain if domain is not None else sol.domain_box()
    sample.fits_domain = cylinder_fits(cyl4, dom)
    if require_fit and not sample.fits_domain:
        raise CensoredSampleError("centered cylinder of radius 4rho does not fit the domain")
    for direction in ("forward", "backward"):
        _direction(sol, sample, direction, domain, require_fit=False)
        if sample.censored_reason is not None:
            raise CensoredSampleError(sample.censored_reason)
    return (
        sample.backward_sup <= gamma * sample.u0
        and sample.u0 <= gamma * sample.forward_inf
    )


# ----------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic lattice of sweep centers.

    n_space points per axis inside [space_lower, space_upper] and n_time
    times inside [t_lo, t_hi].
    """

    space_lower: tuple[float, ...]
    space_upper: tuple[float, ...]
    t_lo: float
    t_hi: float
    n_space: int = 5
    n_time: int = 3
    threshold_rel: float = 1e-6
    require_fit: bool = True

    def centers(self) -> list[tuple[tuple[float, ...], float]]:
        axes = [
            np.linspace(lo, hi, self.n_space)
            for lo, hi in zip(self.space_lower, self.space_upper)
        ]
        times = np.linspace(self.t_lo, self.t_hi, self.n_time)
        out = []
        for xs in itertools.product(*axes):
            for t in times:
                out.append((tuple(float(v) for v in xs), float(t)))
        return out


@dataclass
class HarnackReport:
    """Sweep result: per-sample rows plus fitted constants and metadata."""

    samples: list[HarnackSample]
    gamma_forward: float | None
    gamma_backward: float | None
    c_used: float
    rho_list: tuple[float, ...]
    n_samples: int
    threshold_rel: float
    censored: dict[str, int] = field(default_factory=dict)
    per_rho: dict[float, dict[str, float]] = field(default_factory=dict)

    CSV_COLUMNS = (
        "t0",
        "u0",
        "rho",
        "c",
        "theta",
        "forward_inf",
        "forward_ratio",
        "backward_sup",
        "backward_ratio",
        "censored_reason",
    )

    def csv_rows(self) -> list[list]:
        rows = []
        for s in self.samples:
            row = [repr(v) for v in s.x0]
            row += [
                repr(s.t0),
                repr(s.u0),
                repr(s.rho),
                repr(s.c),
                repr(s.theta),
                "" if s.forward_inf is None else repr(s.forward_inf),
                "" if s.forward_ratio is None else repr(s.forward_ratio),
                "" if s.backward_sup is None else repr(s.backward_sup),
                "" if s.backward_ratio is None else repr(s.backward_ratio),
                s.censored_reason or "",
            ]
            rows.append(row)
        return rows

    def write_csv(self, path) -> None:
        ncoords = len(self.samples[0].x0) if self.samples else 0
        header = [f"x0_{i}" for i in range(ncoords)] + list(self.CSV_COLUMNS)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(self.csv_rows())

    def summary_dict(self) -> dict:
        return {
            "c": self.c_used,
            "gamma_forward": self.gamma_forward,
            "gamma_backward": self.gamma_backward,
            "rho_list": list(self.rho_list),
            "n_samples": self.n_samples,
            "threshold_rel": self.threshold_rel,
            "censored": dict(sorted(self.censored.items())),
            "per_rho": {
                repr(r): stats for r, stats in sorted(self.per_rho.items())
            },
        }


def _quantile(values: list[float], q: float) -> float:
    return float(np.quantile(np.asarray(values), q))


def estimate_constants(
    sol: GridSolution,
    spec: SampleSpec,
    rho_list: Sequence[float],
    c: float,
    domain: DomainBox | None = None,
    workers: int = 1,
) -> HarnackReport:
    """Sweep forward and backward ratios over all (center, rho) pairs.

    The empirical gamma candidates are the max ratios over uncensored
    directions; censored evaluations are counted by reason.  Raises
    EmptyReportError when nothing is admissible.
    """
    rho_list = tuple(float(r) for r in rho_list)
    tasks = [
        (x0, t0, rho) for (x0, t0) in spec.centers() for rho in rho_list
    ]

    def run(task):
        x0, t0, rho = task
        return sample_point(
            sol, x0, t0, rho, c,
            threshold_rel=spec.threshold_rel,
            domain=domain,
            require_fit=spec.require_fit,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(run, tasks))
    else:
        samples = [run(t) for t in tasks]

    censored: dict[str, int] = {}
    fwd, bwd = [], []
    per_rho: dict[float, dict[str, float]] = {}
    for s in samples:
        if s.censored_reason:
            censored[s.censored_reason] = censored.get(s.censored_reason, 0) + 1
        if s.forward_ratio is not None:
            fwd.append(s.forward_ratio)
        if s.backward_ratio is not None:
            bwd.append(s.backward_ratio)
    for rho in rho_list:
        rows_f = [s.forward_ratio for s in samples if s.rho == rho and s.forward_ratio is not None]
        rows_b = [s.backward_ratio for s in samples if s.rho == rho and s.backward_ratio is not None]
        stats: dict[str, float] = {"n_forward": len(rows_f), "n_backward": len(rows_b)}
        if rows_f:
            stats["gamma_forward"] = max(rows_f)
            stats["forward_median"] = _quantile(rows_f, 0.5)
            stats["forward_q90"] = _quantile(rows_f, 0.9)
        if rows_b:
            stats["gamma_backward"] = max(rows_b)
            stats["backward_median"] = _quantile(rows_b, 0.5)
            stats["backward_q90"] = _quantile(rows_b, 0.9)
        per_rho[rho] = stats

    if not fwd and not bwd:
        raise EmptyReportError("no admissible sample in the sweep")
    gamma_forward = max(fwd) if fwd else None
    gamma_backward = max(bwd) if bwd else None
    if gamma_forward is not None and not math.isfinite(gamma_forward):
        raise AssertionError("non-finite forward ratio escaped censoring")
    if gamma_backward is not None and not math.isfinite(gamma_backward):
        raise AssertionError("non-finite backward ratio escaped censoring")
    return HarnackReport(
        samples=samples,
        gamma_forward=gamma_forward,
        gamma_backward=gamma_backward,
        c_used=float(c),
        rho_list=rho_list,
        n_samples=len(samples),
        threshold_rel=spec.threshold_rel,
        censored=censored,
        per_rho=per_rho,
    )
