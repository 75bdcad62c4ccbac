"""Command-line front end: geometry / solve / verify / all.

Exit codes: 0 success, 2 usage, 3 validation, 4 runtime instability,
5 I/O.  Verification failures are data, not errors: verify exits 0 and
reports them in the summaries.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .geometry import (
    PowerVector,
    check_conditions,
    harmonic_mean,
    make_cylinder,
    sobolev_exponent,
)
from .harnack import EmptyReportError, HarnackReport, SampleSpec, estimate_constants
from .hoelder import IterationParams, decay_check, initial_oscillation
from .snapshots import (
    SnapshotFormatError,
    read_solution_snapshots,
    write_solution_snapshots,
)
from .solver import GridSolution, InstabilityError, RunLog, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INSTABILITY = 4
EXIT_IO = 5

# gamma="fit" uses the fitted forward constant, floored here so the
# derived delta stays inside (3/4, 1) even for near-constant solutions
GAMMA_FLOOR = 1.05


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anisolab",
        description="Anisotropic degenerate diffusion laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    geo = sub.add_parser("geometry", help="exponent arithmetic and sample cubes")
    geo.add_argument("--p", required=True, type=_parse_float_list, metavar="P1,P2,...")
    geo.add_argument("--rho", type=float, default=1.0)
    geo.add_argument("--theta", type=float, default=1.0)

    for name in ("solve", "verify", "all"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True)
        cmd.add_argument("--out", required=True)
        cmd.add_argument("--workers", type=int, default=1)
        cmd.add_argument("--seed", type=int, default=None)
        if name != "solve":
            cmd.add_argument("--snapshots", default=None,
                             help="snapshot directory (default: OUT/snapshots)")
    return parser


def cmd_geometry(args) -> int:
    try:
        p = PowerVector(args.p)
        if not (args.rho > 0 and args.theta > 0):
            raise ValueError("rho and theta must be positive")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    pbar = harmonic_mean(p)
    print(f"p = {list(p.p)}  N = {p.N}")
    print(f"pbar = {pbar!r}")
    try:
        print(f"pbar_star = {sobolev_exponent(p)!r}")
    except ValueError as exc:
        print(f"pbar_star: {exc}")
    conditions = check_conditions(p)
    for key, value in conditions.items():
        print(f"{key} = {value}")
    cyl = make_cylinder((tuple(0.0 for _ in range(p.N)), 0.0), args.rho, args.theta, "centered", p)
    print(f"halfwidths(rho={args.rho}, theta={args.theta}) = {[repr(h) for h in cyl.halfwidths]}")
    print(f"time_length = {cyl.time_length!r}")
    print(f"volume = {cyl.volume()!r}")
    return EXIT_OK


def run_solve(cfg: ExperimentConfig, out_dir: Path) -> GridSolution:
    grid = cfg.build_grid()
    u0 = cfg.build_initial(grid)
    log = RunLog()
    sol = solve(
        u0, cfg.T, grid, cfg.p,
        snapshot_times=cfg.snapshot_times,
        safety=cfg.safety, dt_max=cfg.dt_max, log=log,
    )
    snap_dir = out_dir / "snapshots"
    names = write_solution_snapshots(snap_dir, sol)
    payload = log.as_dict()
    payload["snapshot_files"] = names
    payload["backend"] = _backend_name()
    _write_json(out_dir / "run_log.json", payload)
    return sol


def _backend_name() -> str:
    from .kernels import get_backend

    return get_backend()


def load_solution(cfg: ExperimentConfig, snap_dir: Path) -> GridSolution:
    dims, spacing, origin, times, fields = read_solution_snapshots(snap_dir)
    grid = cfg.build_grid()
    if tuple(dims) != grid.dims:
        raise ConfigError(
            f"snapshot dims {tuple(dims)} do not match config dims {grid.dims}"
        )
    if np.max(np.abs(np.subtract(spacing, grid.spacing))) > 1e-12 or \
       np.max(np.abs(np.subtract(origin, grid.origin))) > 1e-12:
        raise ConfigError("snapshot grid geometry does not match the config")
    return GridSolution(grid, cfg.p, times, fields)


def run_verify(cfg: ExperimentConfig, sol: GridSolution, out_dir: Path, workers: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    series_dir = out_dir / "series"
    series_dir.mkdir(exist_ok=True)
    summary: dict = {}
    gamma_fit = None

    if cfg.harnack is not None:
        spec_cfg = cfg.harnack
        if spec_cfg.space_lower is None:
            lo, hi = sol.grid.bounds()
            margin = [(b - a) * 0.25 for a, b in zip(lo, hi)]
            space_lower = [a + m for a, m in zip(lo, margin)]
            space_upper = [b - m for b, m in zip(hi, margin)]
        else:
            space_lower, space_upper = spec_cfg.space_lower, spec_cfg.space_upper
        spec = SampleSpec(
            space_lower=tuple(space_lower),
            space_upper=tuple(space_upper),
            t_lo=spec_cfg.time_window[0],
            t_hi=spec_cfg.time_window[1],
            n_space=spec_cfg.n_space,
            n_time=spec_cfg.n_time,
            threshold_rel=spec_cfg.threshold_rel,
            require_fit=spec_cfg.require_fit,
        )
        reports = []
        for c in spec_cfg.c_list:
            reports.append(estimate_constants(sol, spec, spec_cfg.rho_list, c, workers=workers))
        all_rows = []
        for rep in reports:
            all_rows.extend(rep.samples)
        combined = HarnackReport(
            samples=all_rows,
            gamma_forward=max((r.gamma_forward for r in reports if r.gamma_forward is not None), default=None),
            gamma_backward=max((r.gamma_backward for r in reports if r.gamma_backward is not None), default=None),
            c_used=float("nan"),
            rho_list=tuple(spec_cfg.rho_list),
            n_samples=sum(r.n_samples for r in reports),
            threshold_rel=spec_cfg.threshold_rel,
        )
        combined.write_csv(out_dir / "harnack_samples.csv")
        summary["harnack"] = {
            "gamma_forward": combined.gamma_forward,
            "gamma_backward": combined.gamma_backward,
            "per_c": {repr(r.c_used): r.summary_dict() for r in reports},
        }
        gamma_fit = combined.gamma_forward
        with open(series_dir / "gamma_vs_c.csv", "w") as fh:
            fh.write("c,gamma_forward,gamma_backward\n")
            for rep in reports:
                fh.write(f"{rep.c_used!r},{rep.gamma_forward!r},{rep.gamma_backward!r}\n")
        _write_json(out_dir / "harnack_summary.json", summary["harnack"])

    if cfg.hoelder is not None:
        hspec = cfg.hoelder
        gamma = hspec.gamma
        if gamma == "fit":
            gamma = max(gamma_fit if gamma_fit is not None else GAMMA_FLOOR, GAMMA_FLOOR)
        center = (tuple(hspec.center), float(hspec.t0))
        omega0 = hspec.omega0
        if omega0 == "measure":
            omega0 = initial_oscillation(sol, center, hspec.rho0)
        trace_summary: dict = {"trivial": None}
        if omega0 <= 0.0:
            # constant data: nothing to iterate on, report zero oscillation
            trace_summary = {
                "trivial": True, "gamma": gamma, "alpha_fit": None,
                "omega0": 0.0, "note": "zero initial oscillation",
            }
            (out_dir / "oscillation_trace.csv").write_text(
                "n,rho_n,time_length_n,osc_n,bound_n,pass\n"
            )
        else:
            params = IterationParams.from_power_vector(
                omega0, hspec.rho0, hspec.c, gamma, cfg.p, n_max=hspec.n_max
            )
            trace = decay_check(sol, center, params, cfg.p)
            trace.write_csv(out_dir / "oscillation_trace.csv")
            trace_summary = trace.summary_dict()
            with open(series_dir / "osc_decay.csv", "w") as fh:
                fh.write("rho_n,osc_n,bound_n\n")
                for row in trace.rows:
                    fh.write(f"{row.rho!r},{row.osc!r},{row.bound!r}\n")
        if hspec.seminorm_alpha is not None:
            from .geometry import SpaceTimeBox
            from .hoelder import hoelder_seminorm

            node_lo, node_hi = sol.node_hull()
            t_lo, t_hi = sol.time_hull()
            shrink = 0.2
            K = SpaceTimeBox(
                tuple(a + (b - a) * shrink for a, b in zip(node_lo, node_hi)),
                tuple(b - (b - a) * shrink for a, b in zip(node_lo, node_hi)),
                t_lo + (t_hi - t_lo) * shrink,
                t_hi - (t_hi - t_lo) * shrink,
            )
            trace_summary["seminorm"] = hoelder_seminorm(
                sol, K, hspec.seminorm_alpha, max(sol.max_abs(), 1e-300),
                cfg.p, pair_budget=hspec.seminorm_budget, seed=cfg.seed,
            )
            trace_summary["seminorm_alpha"] = hspec.seminorm_alpha
        summary["hoelder"] = trace_summary
        _write_json(out_dir / "oscillation_summary.json", trace_summary)

    harnack_line = ""
    if "harnack" in summary:
        harnack_line = (
            f"gamma_forward={summary['harnack']['gamma_forward']} "
            f"gamma_backward={summary['harnack']['gamma_backward']} "
        )
    hoelder_line = ""
    if "hoelder" in summary:
        hoelder_line = f"alpha_fit={summary['hoelder'].get('alpha_fit')}"
    print(f"verify: {harnack_line}{hoelder_line}".rstrip())
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "geometry":
        return cmd_geometry(args)

    try:
        cfg = load_config(args.config)
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = Path(args.out)

    try:
        if args.command == "solve":
            out_dir.mkdir(parents=True, exist_ok=True)
            run_solve(cfg, out_dir)
            return EXIT_OK
        if args.command == "all":
            out_dir.mkdir(parents=True, exist_ok=True)
            sol = run_solve(cfg, out_dir)
            return run_verify(cfg, sol, out_dir, args.workers)
        # verify
        snap_dir = Path(args.snapshots) if args.snapshots else out_dir / "snapshots"
        try:
            sol = load_solution(cfg, snap_dir)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except (SnapshotFormatError, OSError) as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        out_dir.mkdir(parents=True, exist_ok=True)
        return run_verify(cfg, sol, out_dir, args.workers)
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (ConfigError, ValueError, EmptyReportError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
