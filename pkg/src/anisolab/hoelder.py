"""Oscillation-decay iteration and empirical Hoelder machinery.

A Harnack constant gamma > 1 fixes the pair

    delta = 1 - 1/(4*gamma),   eps = (1/4) * delta^((pbar-2)/pbar),

and the nested intrinsic cylinders Q_n with radius rho_n = eps^n rho_0
and theta_n = c / omega_n, omega_n = delta^n omega_0.  The scheduled
shrinking satisfies the exact time-scale identity

    theta_{n+1}^(pbar-2) rho_{n+1}^pbar = theta_n^(pbar-2) (rho_n/4)^pbar,

which iteration_schedule verifies along with per-axis inclusion.  The
decay check measures osc u over each Q_n against delta^n omega_0, and
the exponent alpha = |ln delta| / |ln eps| converts geometric decay into
a Hoelder seminorm bound in the intrinsic metric.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    IntrinsicCylinder,
    PowerVector,
    SpaceTimeBox,
    intrinsic_distance,
    make_cylinder,
    pi_distance,
)
from .harnack import cube_extrema, eval_at
from .solver import GridSolution, stable_dt, step

__all__ = [
    "IterationParams",
    "IterationSchedule",
    "OscillationTrace",
    "TraceRow",
    "EmptyIntersectionError",
    "iteration_schedule",
    "initial_oscillation",
    "oscillation",
    "decay_check",
    "alpha_formula",
    "fit_alpha",
    "hoelder_seminorm",
    "per_variable_hoelder_check",
    "halton_points",
]


class EmptyIntersectionError(ValueError):
    """The cylinder does not meet the solution's space-time hull."""


@dataclass(frozen=True)
class IterationParams:
    """Constants driving the oscillation iteration.

    delta and eps are derived from gamma and the harmonic mean; gamma
    must exceed 1 so that delta lands in (3/4, 1) and eps in (0, 1/4].
    """

    omega0: float
    rho0: float
    c: float
    gamma: float
    pbar: float
    n_max: int = 8
    delta: float = field(init=False)
    eps: float = field(init=False)

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if not (self.omega0 > 0 and self.rho0 > 0 and self.c > 0):
            raise ValueError("omega0, rho0, c must be positive")
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")
        delta = 1.0 - 1.0 / (4.0 * self.gamma)
        eps = 0.25 * delta ** ((self.pbar - 2.0) / self.pbar)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eps", eps)

    @classmethod
    def from_power_vector(cls, omega0, rho0, c, gamma, p: PowerVector, n_max: int = 8):
        return cls(float(omega0), float(rho0), float(c), float(gamma), p.pbar, int(n_max))

    def omega(self, n: int) -> float:
        return self.omega0 * self.delta**n

    def rho(self, n: int) -> float:
        return self.rho0 * self.eps**n

    def theta(self, n: int) -> float:
        return self.c / self.omega(n)


@dataclass
class IterationSchedule:
    cylinders: list[IntrinsicCylinder]
    trivial: bool
    params: IterationParams

    def __iter__(self):
        return iter(self.cylinders)


def iteration_schedule(
    params: IterationParams,
    p: PowerVector,
    center: tuple[Sequence[float], float] | None = None,
) -> IterationSchedule:
    """Nested backward cylinders Q_n with theta_n = c/omega_n, rho_n = eps^n rho_0.

    When omega0 <= c*rho0 the degeneracy accommodation fails benignly and
    the schedule is the single cylinder Q_0, flagged trivial ("already
    continuous").  Otherwise the time-scale identity and the per-axis
    shrinking inequality are verified to round-off, and actual nesting
    Q_{n+1} inside Q_n is asserted.
    """
    if abs(params.pbar - p.pbar) > 1e-12 * max(1.0, p.pbar):
        raise ValueError("params were built for a different exponent vector")
    if center is None:
        center = (tuple(0.0 for _ in range(p.N)), 0.0)
    if params.omega0 <= params.c * params.rho0:
        q0 = make_cylinder(center, params.rho0, params.theta(0), "backward", p)
        return IterationSchedule([q0], trivial=True, params=params)

    pbar = p.pbar
    cylinders = []
    for n in range(params.n_max + 1):
        cylinders.append(
            make_cylinder(center, params.rho(n), params.theta(n), "backward", p)
        )

    for n in range(params.n_max):
        th_n, th_n1 = params.theta(n), params.theta(n + 1)
        rho_n, rho_n1 = params.rho(n), params.rho(n + 1)
        lhs = th_n1 ** (pbar - 2.0) * rho_n1**pbar
        rhs = th_n ** (pbar - 2.0) * (rho_n / 4.0) ** pbar
        if abs(lhs - rhs) > 1e-10 * abs(rhs):
            raise AssertionError(
                f"time-scale identity violated at n={n}: {lhs!r} vs {rhs!r}"
            )
        for pi in p.p:
            lhs_i = th_n1 ** ((pbar - pi) / pi) * rho_n1 ** (pbar / pi)
            rhs_i = th_n ** ((pbar - pi) / pi) * (rho_n / 4.0) ** (pbar / pi)
            if lhs_i > rhs_i * (1.0 + 1e-12):
                raise AssertionError(f"per-axis shrinking inequality violated at n={n}")
        a, b = cylinders[n], cylinders[n + 1]
        for h_out, h_in in zip(a.halfwidths, b.halfwidths):
            if h_in > h_out * (1.0 + 1e-12):
                raise AssertionError(f"cylinders not nested spatially at n={n}")
        if b.time_length > a.time_length * (1.0 + 1e-12):
            raise AssertionError(f"cylinders not nested in time at n={n}")
    return IterationSchedule(cylinders, trivial=False, params=params)


# ----------------------------------------------------------------------
# oscillation over cylinders


def _spatial_overlap(sol: GridSolution, center, halfwidths) -> bool:
    node_lo, node_hi = sol.node_hull()
    for c, h, a, b in zip(center, halfwidths, node_lo, node_hi):
        if c + h < a or c - h > b:
            return False
    return True


def oscillation(sol: GridSolution, cyl: IntrinsicCylinder) -> float:
    """sup - inf of u over the cylinder's node/snapshot samples.

    Snapshot times inside the interval are used directly; the interval
    endpoints are added by linear interpolation so that thin cylinders
    (shorter than the snapshot spacing) remain measurable.
    """
    t_lo, t_hi = cyl.t_interval
    hull_lo, hull_hi = sol.time_hull()
    tol = 1e-12 * max(1.0, abs(hull_hi))
    if t_hi < hull_lo - tol or t_lo > hull_hi + tol:
        raise EmptyIntersectionError("cylinder time interval misses the snapshots")
    if not _spatial_overlap(sol, cyl.center_x, cyl.halfwidths):
        raise EmptyIntersectionError("cylinder cube misses the grid")
    t_lo = max(t_lo, hull_lo)
    t_hi = min(t_hi, hull_hi)
    times = [t_lo, t_hi]
    inside = sol.times[(sol.times >= t_lo) & (sol.times <= t_hi)]
    times.extend(float(t) for t in inside)
    lo = math.inf
    hi = -math.inf
    for t in dict.fromkeys(times):
        a, b, _ = cube_extrema(sol, cyl.center_x, cyl.halfwidths, t)
        lo = min(lo, a)
        hi = max(hi, b)
    return hi - lo


def initial_oscillation(sol: GridSolution, center, rho0: float) -> float:
    """Oscillation over the standard parabolic cylinder: plain cube of
    halfwidth rho0 times the backward interval of length rho0^2."""
    x0, t0 = center
    # with all exponents 2 the intrinsic cylinder reduces to exactly that
    iso = make_cylinder((x0, t0), rho0, 1.0, "backward", PowerVector([2.0] * len(x0)))
    return oscillation(sol, iso)


@dataclass
class TraceRow:
    n: int
    rho: float
    time_length: float
    osc: float
    bound: float
    passed: bool
    vacuous: bool
    cylinder: IntrinsicCylinder | None = None


@dataclass
class OscillationTrace:
    """Measured oscillation decay along the cylinder schedule."""

    rows: list[TraceRow]
    omega0: float
    params: IterationParams
    noise_floor: float
    trivial: bool = False
    alpha_fit: float | None = None
    fitted_delta: float | None = None

    @property
    def alpha_formula_value(self) -> float:
        return alpha_formula(self.params.delta, self.params.eps)

    def usable_rows(self) -> list[TraceRow]:
        return [r for r in self.rows if r.osc > max(self.noise_floor, 0.0)]

    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def csv_rows(self) -> list[list]:
        return [
            [r.n, repr(r.rho), repr(r.time_length), repr(r.osc), repr(r.bound), r.passed]
            for r in self.rows
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "rho_n", "time_length_n", "osc_n", "bound_n", "pass"])
            writer.writerows(self.csv_rows())

    def summary_dict(self) -> dict:
        alpha_fd = None
        if self.fitted_delta is not None and 0.0 < self.fitted_delta < 1.0:
            alpha_fd = alpha_formula(self.fitted_delta, self.params.eps)
        return {
            "gamma": self.params.gamma,
            "delta": self.params.delta,
            "eps": self.params.eps,
            "omega0": self.omega0,
            "noise_floor": self.noise_floor,
            "trivial": self.trivial,
            "alpha_fit": self.alpha_fit,
            "alpha_formula": self.alpha_formula_value,
            "fitted_delta": self.fitted_delta,
            "alpha_from_fitted_delta": alpha_fd,
            "n_rows": len(self.rows),
            "n_pass": sum(1 for r in self.rows if r.passed),
            "n_vacuous": sum(1 for r in self.rows if r.vacuous),
        }


def _resolution_floor(sol: GridSolution) -> float:
    """Ten times the max nodewise change of one stable solver step at the
    finest recorded time; discrete oscillation below this is noise."""
    u = sol.fields[-1]
    t = float(sol.times[-1])
    dt = stable_dt(u, sol.grid, sol.p, safety=0.9, t=t)
    moved = step(u, dt, sol.grid, sol.p, t=t)
    return 10.0 * float(np.max(np.abs(moved - u)))


def _box_inside_hull(sol: GridSolution, cyl: IntrinsicCylinder) -> bool:
    node_lo, node_hi = sol.node_hull()
    t_lo, t_hi = cyl.t_interval
    hull_lo, hull_hi = sol.time_hull()
    tol = 1e-12 * max(1.0, abs(hull_hi))
    if t_lo < hull_lo - tol or t_hi > hull_hi + tol:
        return False
    for c, h, a, b in zip(cyl.center_x, cyl.halfwidths, node_lo, node_hi):
        if c - h < a - 1e-12 or c + h > b + 1e-12:
            return False
    return True


def decay_check(
    sol: GridSolution,
    center: tuple[Sequence[float], float],
    params: IterationParams,
    p: PowerVector,
) -> OscillationTrace:
    """Measure osc over each scheduled cylinder against delta^n * omega0.

    omega0 is re-measured on Q_0 so the n=0 row holds with equality;
    rows whose oscillation sits below the grid resolution floor pass
    vacuously.
    """
    schedule = iteration_schedule(params, p, center)
    q0 = schedule.cylinders[0]
    if not _box_inside_hull(sol, q0):
        raise ValueError("Q_0 does not fit inside the recorded solution hull")
    floor = _resolution_floor(sol)
    omega0 = oscillation(sol, q0)
    rows = []
    for n, cyl in enumerate(schedule.cylinders):
        osc = oscillation(sol, cyl)
        bound = params.delta**n * omega0
        vacuous = osc < floor
        passed = bool(osc <= bound * (1.0 + 1e-12) or vacuous)
        rows.append(TraceRow(n, cyl.rho, cyl.time_length, osc, bound, passed, vacuous, cyl))
    trace = OscillationTrace(rows, omega0, params, floor, trivial=schedule.trivial)

    usable = trace.usable_rows()
    if len(usable) >= 3:
        trace.alpha_fit = fit_alpha(trace)
    ratios = []
    for a, b in zip(usable, usable[1:]):
        if b.n == a.n + 1 and a.osc > 0:
            ratios.append(b.osc / a.osc)
    if ratios:
        trace.fitted_delta = float(np.exp(np.mean(np.log(ratios))))
    return trace


def alpha_formula(delta: float, eps: float) -> float:
    """Hoelder exponent |ln delta| / |ln eps| for delta, eps in (0, 1)."""
    if not (0.0 < delta < 1.0 and 0.0 < eps < 1.0):
        raise ValueError("delta and eps must lie in (0, 1)")
    return abs(math.log(delta)) / abs(math.log(eps))


def fit_alpha(trace: OscillationTrace) -> float:
    """Least-squares slope of ln(osc_n) against ln(rho_n) over usable rows."""
    usable = [r for r in trace.usable_rows() if r.osc > 0]
    if len(usable) < 3:
        raise ValueError("need at least 3 rows above the noise floor to fit alpha")
    x = np.log([r.rho for r in usable])
    y = np.log([r.osc for r in usable])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope


# ----------------------------------------------------------------------
# intrinsic Hoelder seminorms

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def _radical_inverse(i: int, base: int) -> float:
    inv = 0.0
    f = 1.0 / base
    while i > 0:
        inv += f * (i % base)
        i //= base
        f /= base
    return inv


def halton_points(n: int, dim: int, start: int = 1) -> np.ndarray:
    """First n points of the Halton low-discrepancy sequence in [0,1)^dim.

    Deterministic and nested: the first k rows for any k <= n are always
    the same, so budget growth only extends the sample set.
    """
    if dim > len(_PRIMES):
        raise ValueError("too many dimensions for the Halton basis table")
    out = np.empty((n, dim))
    for row in range(n):
        for d in range(dim):
            out[row, d] = _radical_inverse(start + row, _PRIMES[d])
    return out


def _map_to_box(unit: np.ndarray, K: SpaceTimeBox) -> tuple[np.ndarray, np.ndarray]:
    """Map unit-cube rows (N+1 wide) to points (x, t) inside K."""
    lo = np.asarray(K.lower)
    hi = np.asarray(K.upper)
    xs = lo + unit[:, : len(lo)] * (hi - lo)
    ts = K.t_lo + unit[:, len(lo)] * (K.t_hi - K.t_lo)
    return xs, ts


def _check_box_in_hull(sol: GridSolution, K: SpaceTimeBox) -> None:
    node_lo, node_hi = sol.node_hull()
    t_lo, t_hi = sol.time_hull()
    for a, b, lo, hi in zip(K.lower, K.upper, node_lo, node_hi):
        if a < lo - 1e-12 or b > hi + 1e-12:
            raise ValueError("box K extends outside the solution hull")
    if K.t_lo < t_lo - 1e-12 or K.t_hi > t_hi + 1e-12:
        raise ValueError("box K extends outside the recorded time window")


def hoelder_seminorm(
    sol: GridSolution,
    K: SpaceTimeBox,
    alpha: float,
    M: float,
    p: PowerVector,
    pair_budget: int = 1000,
    seed: int = 0,
) -> float:
    """Max over sampled point pairs of |u(a)-u(b)| / d(a,b)^alpha.

    d is the intrinsic distance with sup bound M (which must dominate
    max |u|).  Pairs come from a nested low-discrepancy sequence, so a
    larger budget never decreases the result.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if M < sol.max_abs() * (1.0 - 1e-12):
        raise ValueError("M must dominate max |u|")
    if any(b <= a for a, b in zip(K.lower, K.upper)) or K.t_hi <= K.t_lo:
        raise ValueError("degenerate sampling box K")
    _check_box_in_hull(sol, K)
    dim = 2 * (p.N + 1)
    unit = halton_points(pair_budget, dim, start=1 + int(seed))
    xa, ta = _map_to_box(unit[:, : p.N + 1], K)
    xb, tb = _map_to_box(unit[:, p.N + 1 :], K)
    best = 0.0
    for k in range(pair_budget):
        d = intrinsic_distance((xa[k], ta[k]), (xb[k], tb[k]), M, p)
        if d == 0.0:
            continue
        du = abs(eval_at(sol, xa[k], float(ta[k])) - eval_at(sol, xb[k], float(tb[k])))
        best = max(best, du / d**alpha)
    return best


def per_variable_hoelder_check(
    sol: GridSolution,
    K: SpaceTimeBox,
    alpha: float,
    M: float,
    p: PowerVector,
    n_pairs: int = 128,
    domain=None,
) -> dict:
    """Two-branch per-variable bound check on sampled coordinate pairs.

    For pairs separated only along axis i (or only in time) the
    equivalent radius rho_pair = |dx_i|^(p_i/pbar) M^((pbar-p_i)/p_i)
    (resp. |dt|^(1/pbar) M^((pbar-2)/pbar)) is compared against
    R = pi-dist/2: the small-separation branch reflects the oscillation
    decay estimate and the large-separation branch the unconditional
    2M <= 4M*(rho_pair/pi-dist)^alpha inequality.  Records worst-case
    slack (bound minus |du|) per branch.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    dom = domain if domain is not None else sol.domain_box()
    pid = pi_distance(K, dom, M, p)
    if pid <= 0.0:
        raise ValueError("pi-distance is zero: K touches the boundary")
    _check_box_in_hull(sol, K)
    R = 0.5 * pid
    pbar = p.pbar
    lo = np.asarray(K.lower)
    hi = np.asarray(K.upper)

    def branch_record():
        return {"count": 0, "min_slack": None, "pass": True}

    def update(rec, slack):
        rec["count"] += 1
        rec["min_slack"] = slack if rec["min_slack"] is None else min(rec["min_slack"], slack)
        if slack < -1e-12 * max(1.0, 4.0 * M):
            rec["pass"] = False

    results = {"pi_distance": pid, "R": R, "axes": [], "time": None}
    all_pass = True

    for axis in range(p.N):
        unit = halton_points(n_pairs, p.N + 2, start=1)
        xs, ts = _map_to_box(unit[:, : p.N + 1], K)
        alt = lo[axis] + unit[:, p.N + 1] * (hi[axis] - lo[axis])
        small, large = branch_record(), branch_record()
        pi_ax = p.p[axis]
        cut = M ** ((pi_ax - pbar) / pi_ax) * R ** (pbar / pi_ax)
        for k in range(n_pairs):
            dx = abs(alt[k] - xs[k, axis])
            if dx == 0.0:
                continue
            ya = xs[k].copy()
            ya[axis] = alt[k]
            rho_pair = dx ** (pi_ax / pbar) * M ** ((pbar - pi_ax) / pi_ax)
            bound = 4.0 * M * (rho_pair / pid) ** alpha
            du = abs(eval_at(sol, xs[k], float(ts[k])) - eval_at(sol, ya, float(ts[k])))
            update(small if dx < cut else large, bound - du)
        results["axes"].append({"axis": axis, "small": small, "large": large})
        all_pass = all_pass and small["pass"] and large["pass"]

    unit = halton_points(n_pairs, p.N + 2, start=1)
    xs, ts = _map_to_box(unit[:, : p.N + 1], K)
    alt_t = K.t_lo + unit[:, p.N + 1] * (K.t_hi - K.t_lo)
    small, large = branch_record(), branch_record()
    cut_t = M ** (2.0 - pbar) * R**pbar
    for k in range(n_pairs):
        dt = abs(alt_t[k] - ts[k])
        if dt == 0.0:
            continue
        rho_pair = dt ** (1.0 / pbar) * M ** ((pbar - 2.0) / pbar)
        bound = 4.0 * M * (rho_pair / pid) ** alpha
        du = abs(eval_at(sol, xs[k], float(ts[k])) - eval_at(sol, xs[k], float(alt_t[k])))
        update(small if dt < cut_t else large, bound - du)
    results["time"] = {"small": small, "large": large}
    all_pass = all_pass and small["pass"] and large["pass"]
    results["all_pass"] = all_pass
    return results
