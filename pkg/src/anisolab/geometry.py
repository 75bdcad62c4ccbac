"""Exponent arithmetic and the intrinsic anisotropic geometry.

The diffusion exponents p = (p_1, ..., p_N) induce a solution-dependent
geometry: anisotropic cubes whose per-axis halfwidths trade the spatial
scale rho against an intrinsic parameter theta, and space-time cylinders
whose time extent scales like theta^(2-pbar) * rho^pbar.  The cube volume
is independent of theta, which is the structural fact most of the test
suite leans on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "PowerVector",
    "DomainBox",
    "SpaceTimeBox",
    "IntrinsicCylinder",
    "CylinderKind",
    "harmonic_mean",
    "sobolev_exponent",
    "check_conditions",
    "make_cylinder",
    "cylinder_fits",
    "intrinsic_distance",
    "pi_distance",
]

CylinderKind = str  # one of "centered", "forward", "backward"
_KINDS = ("centered", "forward", "backward")


@dataclass(frozen=True)
class PowerVector:
    """The exponent vector p = (p_1,...,p_N), stored sorted nondecreasing.

    Every p_i must be >= 2.  The value 2 is allowed only so the linear
    heat equation is available as an exact oracle; `degenerate` is True
    iff every exponent is strictly above 2.
    """

    p: tuple[float, ...]
    N: int = field(init=False)

    def __init__(self, p: Sequence[float]):
        values = tuple(float(v) for v in p)
        if len(values) < 1:
            raise ValueError("power vector needs at least one exponent")
        for v in values:
            if not math.isfinite(v):
                raise ValueError("power vector entries must be finite")
            if v < 2.0:
                raise ValueError(f"exponent {v} < 2 is not admitted")
        object.__setattr__(self, "p", tuple(sorted(values)))
        object.__setattr__(self, "N", len(values))

    @property
    def degenerate(self) -> bool:
        return all(v > 2.0 for v in self.p)

    @property
    def pbar(self) -> float:
        return harmonic_mean(self)

    @property
    def isotropic(self) -> bool:
        return self.p[0] == self.p[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)


def harmonic_mean(p: PowerVector) -> float:
    """Harmonic mean pbar of the exponents; lies in [min p_i, max p_i]."""
    return p.N / sum(1.0 / v for v in p.p)


def sobolev_exponent(p: PowerVector) -> float:
    """Sobolev exponent N*pbar/(N - pbar) of the harmonic mean.

    Only defined in the subcritical range pbar < N.
    """
    pbar = harmonic_mean(p)
    if pbar >= p.N:
        raise ValueError(f"supercritical: pbar >= N (pbar={pbar:.6g}, N={p.N})")
    return p.N * pbar / (p.N - pbar)


def check_conditions(p: PowerVector) -> dict[str, bool]:
    """Classify the exponent vector.

    degenerate_ok:  all p_i > 2 (strictly degenerate diffusion)
    bounded_ok:     all p_i < pbar*(1 + 2/N), the range where local weak
                    solutions are known to be bounded
    subcritical_ok: pbar < N, needed only for the Sobolev exponent
    """
    pbar = harmonic_mean(p)
    bound = pbar * (1.0 + 2.0 / p.N)
    return {
        "degenerate_ok": all(v > 2.0 for v in p.p),
        "bounded_ok": all(v < bound for v in p.p),
        "subcritical_ok": pbar < p.N,
    }


@dataclass(frozen=True)
class DomainBox:
    """Rectangular space-time domain: box [lower, upper] x [t_start, T]."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    T: float
    t_start: float = 0.0

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower/upper corner dimension mismatch")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"degenerate box axis: lower {lo} >= upper {hi}")
        if not self.T > self.t_start:
            raise ValueError("time horizon must exceed the start time")

    @property
    def N(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class SpaceTimeBox:
    """Axis-aligned compact box K inside a domain: spatial bounds x time interval."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower/upper corner dimension mismatch")
        for lo, hi in zip(self.lower, self.upper):
            if lo > hi:
                raise ValueError("box has negative spatial extent")
        if self.t_lo > self.t_hi:
            raise ValueError("box has negative time extent")

    @property
    def N(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class IntrinsicCylinder:
    """Anisotropic cube times a time interval, anchored at `center`.

    halfwidths[i] = theta^((p_i-pbar)/p_i) * rho^(pbar/p_i)
    time_length   = theta^(2-pbar) * rho^pbar

    The time interval depends on `kind`: forward [t0, t0+L), backward
    (t0-L, t0], centered (t0-L, t0+L).  theta is stored unexponentiated;
    all exponents live in the derived fields.
    """

    center_x: tuple[float, ...]
    center_t: float
    rho: float
    theta: float
    kind: CylinderKind
    p: PowerVector
    halfwidths: tuple[float, ...] = field(init=False)
    time_length: float = field(init=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown cylinder kind {self.kind!r}")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if len(self.center_x) != self.p.N:
            raise ValueError("center dimension does not match exponent vector")
        pbar = self.p.pbar
        hw = tuple(
            self.theta ** ((pi - pbar) / pi) * self.rho ** (pbar / pi)
            for pi in self.p.p
        )
        object.__setattr__(self, "halfwidths", hw)
        object.__setattr__(self, "time_length", self.theta ** (2.0 - pbar) * self.rho**pbar)

    @property
    def t_interval(self) -> tuple[float, float]:
        """(t_lo, t_hi) of the cylinder's time span."""
        t0, L = self.center_t, self.time_length
        if self.kind == "forward":
            return (t0, t0 + L)
        if self.kind == "backward":
            return (t0 - L, t0)
        return (t0 - L, t0 + L)

    def spatial_bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        lo = tuple(c - h for c, h in zip(self.center_x, self.halfwidths))
        hi = tuple(c + h for c, h in zip(self.center_x, self.halfwidths))
        return lo, hi

    def as_box(self) -> SpaceTimeBox:
        lo, hi = self.spatial_bounds()
        t_lo, t_hi = self.t_interval
        return SpaceTimeBox(lo, hi, t_lo, t_hi)

    def volume(self) -> float:
        """Spatial volume, equal to (2*rho)^N for every theta."""
        return math.prod(2.0 * h for h in self.halfwidths)


def make_cylinder(
    center: tuple[Sequence[float], float],
    rho: float,
    theta: float,
    kind: CylinderKind,
    p: PowerVector,
) -> IntrinsicCylinder:
    """Build the intrinsic cylinder anchored at center = (x0, t0)."""
    x0, t0 = center
    return IntrinsicCylinder(tuple(float(v) for v in x0), float(t0), float(rho), float(theta), kind, p)


def cylinder_fits(cyl: IntrinsicCylinder, dom: DomainBox) -> bool:
    """True iff the cylinder's box and time interval lie strictly inside dom."""
    if cyl.p.N != dom.N:
        raise ValueError("cylinder/domain dimension mismatch")
    lo, hi = cyl.spatial_bounds()
    for a, b, dlo, dhi in zip(lo, hi, dom.lower, dom.upper):
        if not (dlo < a and b < dhi):
            return False
    t_lo, t_hi = cyl.t_interval
    return dom.t_start < t_lo and t_hi < dom.T


def intrinsic_distance(
    a: tuple[Sequence[float], float],
    b: tuple[Sequence[float], float],
    M: float,
    p: PowerVector,
) -> float:
    """Intrinsic space-time distance weighted by the sup bound M > 0.

    sum_i |ax_i - bx_i|^(p_i/pbar) M^((pbar-p_i)/p_i)
        + |at - bt|^(1/pbar) M^((pbar-2)/pbar)

    Symmetric, zero iff a == b.  Not a metric (no triangle inequality
    claimed); when all p_i = 2 the M factors cancel.
    """
    if not M > 0:
        raise ValueError("M must be positive")
    ax, at = a
    bx, bt = b
    if len(ax) != p.N or len(bx) != p.N:
        raise ValueError("point dimension does not match exponent vector")
    pbar = p.pbar
    total = 0.0
    for xi, yi, pi in zip(ax, bx, p.p):
        total += abs(float(xi) - float(yi)) ** (pi / pbar) * M ** ((pbar - pi) / pi)
    total += abs(float(at) - float(bt)) ** (1.0 / pbar) * M ** ((pbar - 2.0) / pbar)
    return total


def pi_distance(K: SpaceTimeBox, dom: DomainBox, M: float, p: PowerVector) -> float:
    """Intrinsic distance from the compact box K to the boundary of dom.

    Per axis the relevant gap is between facing faces, so the infimum has
    the closed form

        min( min_i gap_i^(p_i/pbar) M^((pbar-p_i)/p_i),
             tgap^(1/pbar) M^((pbar-2)/pbar) ).

    Returns 0.0 when K touches the boundary (degenerate configuration).
    """
    if not M > 0:
        raise ValueError("M must be positive")
    if K.N != dom.N or K.N != p.N:
        raise ValueError("box/domain/exponent dimension mismatch")
    pbar = p.pbar
    gaps = []
    for klo, khi, dlo, dhi in zip(K.lower, K.upper, dom.lower, dom.upper):
        gaps.append(min(klo - dlo, dhi - khi))
    tgap = min(K.t_lo - dom.t_start, dom.T - K.t_hi)
    if min(gaps) <= 0.0 or tgap <= 0.0:
        return 0.0
    best = tgap ** (1.0 / pbar) * M ** ((pbar - 2.0) / pbar)
    for g, pi in zip(gaps, p.p):
        best = min(best, g ** (pi / pbar) * M ** ((pbar - pi) / pi))
    return best
