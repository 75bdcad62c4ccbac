"""Experiment configuration: strict JSON schema with distinct messages
per inconsistency class.  Unknown keys are errors so sweep typos cannot
pass silently."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import DomainBox, PowerVector
from .initial import bump_field, heat_kernel_field, random_field, spike_field
from .solver import Grid, gaussian_exact


class ConfigError(ValueError):
    pass


def _require_keys(d: dict, allowed: set[str], required: set[str], where: str) -> None:
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {where}")
    for k in required:
        if k not in d:
            raise ConfigError(f"missing key {k!r} in {where}")


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    return float(v)


def _number_list(v, where: str) -> list[float]:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where} must be a nonempty list of numbers")
    return [_number(x, where) for x in v]


@dataclass
class HarnackSpec:
    rho_list: list[float]
    c_list: list[float]
    time_window: tuple[float, float]
    space_lower: list[float] | None = None
    space_upper: list[float] | None = None
    n_space: int = 5
    n_time: int = 3
    threshold_rel: float = 1e-6
    require_fit: bool = True


@dataclass
class HoelderSpec:
    center: list[float]
    t0: float
    rho0: float
    c: float
    gamma: object = "fit"  # "fit" or a number > 1
    n_max: int = 5
    omega0: object = "measure"  # "measure" or a number > 0
    seminorm_alpha: float | None = None
    seminorm_budget: int = 1000


@dataclass
class ExperimentConfig:
    p: PowerVector
    lower: list[float]
    upper: list[float]
    T: float
    dims: list[int]
    bc: str
    dirichlet_value: object
    initial: dict
    snapshot_times: list[float]
    safety: float = 0.9
    dt_max: float | None = None
    seed: int = 0
    harnack: HarnackSpec | None = None
    hoelder: HoelderSpec | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return self.p.N

    def spacing(self) -> list[float]:
        return [(u - l) / n for l, u, n in zip(self.lower, self.upper, self.dims)]

    def domain_box(self) -> DomainBox:
        return DomainBox(tuple(self.lower), tuple(self.upper), T=self.T)

    def build_grid(self) -> Grid:
        dirichlet = None
        if self.bc == "dirichlet":
            if self.dirichlet_value == "exact-heat":
                t0 = float(self.initial["t0"])

                def dirichlet(X, t, _t0=t0):
                    return gaussian_exact(X, t + _t0, len(X))

            else:
                dirichlet = float(self.dirichlet_value)
        return Grid(
            dims=tuple(self.dims),
            spacing=tuple(self.spacing()),
            origin=tuple(self.lower),
            bc=self.bc,
            dirichlet=dirichlet,
        )

    def build_initial(self, grid: Grid) -> np.ndarray:
        kind = self.initial["kind"]
        if kind == "bump":
            return bump_field(
                grid,
                self.initial["center"],
                self.initial["width"],
                self.initial.get("amplitude", 1.0),
                self.initial.get("floor", 0.0),
            )
        if kind == "spike":
            return spike_field(grid, self.initial.get("amplitude", 1.0))
        if kind == "random":
            return random_field(
                grid,
                self.seed,
                self.initial.get("low", 0.0),
                self.initial.get("high", 1.0),
            )
        return heat_kernel_field(grid, self.initial["t0"])


_TOP_KEYS = {
    "p", "domain", "grid", "initial", "snapshot_times",
    "safety", "dt_max", "seed", "harnack", "hoelder",
}


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _require_keys(data, _TOP_KEYS, {"p", "domain", "grid", "initial", "snapshot_times"}, "config")

    p_raw = _number_list(data["p"], "p")
    for v in p_raw:
        if v < 2.0:
            raise ConfigError(f"exponent {v} is below 2")
    p = PowerVector(p_raw)
    N = p.N

    dom = data["domain"]
    if not isinstance(dom, dict):
        raise ConfigError("domain must be an object")
    _require_keys(dom, {"lower", "upper", "time"}, {"lower", "upper", "time"}, "domain")
    lower = _number_list(dom["lower"], "domain.lower")
    upper = _number_list(dom["upper"], "domain.upper")
    if len(lower) != N or len(upper) != N:
        raise ConfigError(
            f"dimension mismatch: p has {N} entries, domain corners have "
            f"{len(lower)}/{len(upper)}"
        )
    for lo, hi in zip(lower, upper):
        if not lo < hi:
            raise ConfigError(f"domain extent must be positive on every axis ({lo} >= {hi})")
    T = _number(dom["time"], "domain.time")
    if not T >= 0:
        raise ConfigError("domain.time must be nonnegative")

    grid_raw = data["grid"]
    if not isinstance(grid_raw, dict):
        raise ConfigError("grid must be an object")
    _require_keys(grid_raw, {"dims", "bc"}, {"dims", "bc"}, "grid")
    dims_raw = grid_raw["dims"]
    if not isinstance(dims_raw, list) or len(dims_raw) != N:
        raise ConfigError(f"grid.dims must be a list of {N} integers")
    dims = []
    for d in dims_raw:
        if isinstance(d, bool) or not isinstance(d, int):
            raise ConfigError(f"grid dimension {d!r} is not an integer")
        if d < 3:
            raise ConfigError(f"grid needs at least 3 cells per axis, got {d}")
        dims.append(d)

    bc_raw = grid_raw["bc"]
    dirichlet_value = None
    if isinstance(bc_raw, str):
        if bc_raw not in ("periodic", "zero_flux"):
            raise ConfigError(f"unknown boundary condition {bc_raw!r}")
        bc = bc_raw
    elif isinstance(bc_raw, dict):
        _require_keys(bc_raw, {"kind", "value"}, {"kind", "value"}, "grid.bc")
        if bc_raw["kind"] != "dirichlet":
            raise ConfigError(f"unknown boundary condition kind {bc_raw['kind']!r}")
        bc = "dirichlet"
        dirichlet_value = bc_raw["value"]
        if dirichlet_value != "exact-heat":
            dirichlet_value = _number(dirichlet_value, "grid.bc.value")
    else:
        raise ConfigError("grid.bc must be a string or a dirichlet object")

    initial = data["initial"]
    if not isinstance(initial, dict) or "kind" not in initial:
        raise ConfigError("initial must be an object with a 'kind'")
    kind = initial["kind"]
    if kind == "bump":
        _require_keys(
            initial, {"kind", "center", "width", "amplitude", "floor"},
            {"center", "width"}, "initial(bump)",
        )
        if len(_number_list(initial["center"], "initial.center")) != N:
            raise ConfigError("initial.center dimension mismatch")
        if len(_number_list(initial["width"], "initial.width")) != N:
            raise ConfigError("initial.width dimension mismatch")
        for w in initial["width"]:
            if not w > 0:
                raise ConfigError("initial.width entries must be positive")
    elif kind == "spike":
        _require_keys(initial, {"kind", "amplitude"}, set(), "initial(spike)")
    elif kind == "random":
        _require_keys(initial, {"kind", "low", "high"}, set(), "initial(random)")
        low = _number(initial.get("low", 0.0), "initial.low")
        high = _number(initial.get("high", 1.0), "initial.high")
        if low < 0 or high <= low:
            raise ConfigError("initial random range must satisfy 0 <= low < high")
    elif kind == "heat-kernel":
        _require_keys(initial, {"kind", "t0"}, {"t0"}, "initial(heat-kernel)")
        if not _number(initial["t0"], "initial.t0") > 0:
            raise ConfigError("initial.t0 must be positive")
    else:
        raise ConfigError(f"unknown initial data kind {kind!r}")
    if dirichlet_value == "exact-heat" and kind != "heat-kernel":
        raise ConfigError("bc value 'exact-heat' requires heat-kernel initial data")

    snaps_raw = data["snapshot_times"]
    if isinstance(snaps_raw, dict):
        _require_keys(snaps_raw, {"start", "stop", "count"}, {"start", "stop", "count"}, "snapshot_times")
        count = snaps_raw["count"]
        if not isinstance(count, int) or count < 1:
            raise ConfigError("snapshot_times.count must be a positive integer")
        snaps = list(
            np.linspace(
                _number(snaps_raw["start"], "snapshot_times.start"),
                _number(snaps_raw["stop"], "snapshot_times.stop"),
                count,
            )
        )
    else:
        snaps = _number_list(snaps_raw, "snapshot_times")
    snaps = sorted(set(float(s) for s in snaps))
    if snaps[0] < 0.0 or snaps[-1] > T:
        raise ConfigError("snapshot times must lie inside [0, domain.time]")

    safety = _number(data.get("safety", 0.9), "safety")
    if not 0.0 < safety <= 1.0:
        raise ConfigError("safety must be in (0, 1]")
    dt_max = data.get("dt_max")
    if dt_max is not None:
        dt_max = _number(dt_max, "dt_max")
        if not dt_max > 0:
            raise ConfigError("dt_max must be positive")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")

    harnack = _parse_harnack(data.get("harnack"), N, T)
    hoelder = _parse_hoelder(data.get("hoelder"), N)

    return ExperimentConfig(
        p=p, lower=lower, upper=upper, T=T, dims=dims,
        bc=bc, dirichlet_value=dirichlet_value,
        initial=initial, snapshot_times=snaps,
        safety=safety, dt_max=dt_max, seed=seed,
        harnack=harnack, hoelder=hoelder, raw=data,
    )


def _parse_harnack(raw, N: int, T: float) -> HarnackSpec | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("harnack must be an object")
    allowed = {
        "rho_list", "c_list", "time_window", "space_lower", "space_upper",
        "n_space", "n_time", "threshold_rel", "require_fit",
    }
    _require_keys(raw, allowed, {"rho_list", "c_list", "time_window"}, "harnack")
    rho_list = _number_list(raw["rho_list"], "harnack.rho_list")
    if any(r <= 0 for r in rho_list):
        raise ConfigError("harnack.rho_list entries must be positive")
    c_list = _number_list(raw["c_list"], "harnack.c_list")
    if any(c <= 0 for c in c_list):
        raise ConfigError("harnack.c_list entries must be positive")
    window = _number_list(raw["time_window"], "harnack.time_window")
    if len(window) != 2 or not window[0] <= window[1]:
        raise ConfigError("harnack.time_window must be [t_lo, t_hi] with t_lo <= t_hi")
    space_lower = space_upper = None
    if ("space_lower" in raw) != ("space_upper" in raw):
        raise ConfigError("harnack.space_lower and space_upper must come together")
    if "space_lower" in raw:
        space_lower = _number_list(raw["space_lower"], "harnack.space_lower")
        space_upper = _number_list(raw["space_upper"], "harnack.space_upper")
        if len(space_lower) != N or len(space_upper) != N:
            raise ConfigError("harnack sample box dimension mismatch")
    n_space = raw.get("n_space", 5)
    n_time = raw.get("n_time", 3)
    for name, v in (("n_space", n_space), ("n_time", n_time)):
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"harnack.{name} must be a positive integer")
    threshold_rel = _number(raw.get("threshold_rel", 1e-6), "harnack.threshold_rel")
    if threshold_rel < 0:
        raise ConfigError("harnack.threshold_rel must be nonnegative")
    require_fit = raw.get("require_fit", True)
    if not isinstance(require_fit, bool):
        raise ConfigError("harnack.require_fit must be a boolean")
    return HarnackSpec(
        rho_list=rho_list, c_list=c_list, time_window=(window[0], window[1]),
        space_lower=space_lower, space_upper=space_upper,
        n_space=n_space, n_time=n_time,
        threshold_rel=threshold_rel, require_fit=require_fit,
    )


def _parse_hoelder(raw, N: int) -> HoelderSpec | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("hoelder must be an object")
    allowed = {"center", "t0", "rho0", "c", "gamma", "n_max", "omega0",
               "seminorm_alpha", "seminorm_budget"}
    _require_keys(raw, allowed, {"center", "t0", "rho0", "c"}, "hoelder")
    center = _number_list(raw["center"], "hoelder.center")
    if len(center) != N:
        raise ConfigError("hoelder.center dimension mismatch")
    rho0 = _number(raw["rho0"], "hoelder.rho0")
    c = _number(raw["c"], "hoelder.c")
    if rho0 <= 0 or c <= 0:
        raise ConfigError("hoelder.rho0 and hoelder.c must be positive")
    gamma = raw.get("gamma", "fit")
    if gamma != "fit":
        gamma = _number(gamma, "hoelder.gamma")
        if gamma <= 1.0:
            raise ConfigError("hoelder.gamma must exceed 1")
    n_max = raw.get("n_max", 5)
    if not isinstance(n_max, int) or n_max < 0:
        raise ConfigError("hoelder.n_max must be a nonnegative integer")
    omega0 = raw.get("omega0", "measure")
    if omega0 != "measure":
        omega0 = _number(omega0, "hoelder.omega0")
        if omega0 <= 0:
            raise ConfigError("hoelder.omega0 must be positive")
    seminorm_alpha = raw.get("seminorm_alpha")
    if seminorm_alpha is not None:
        seminorm_alpha = _number(seminorm_alpha, "hoelder.seminorm_alpha")
        if not 0.0 < seminorm_alpha < 1.0:
            raise ConfigError("hoelder.seminorm_alpha must be in (0, 1)")
    budget = raw.get("seminorm_budget", 1000)
    if not isinstance(budget, int) or budget < 1:
        raise ConfigError("hoelder.seminorm_budget must be a positive integer")
    return HoelderSpec(
        center=center, t0=_number(raw["t0"], "hoelder.t0"),
        rho0=rho0, c=c, gamma=gamma, n_max=n_max, omega0=omega0,
        seminorm_alpha=seminorm_alpha, seminorm_budget=budget,
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IOError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
