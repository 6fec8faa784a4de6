"""Command-line entry point.

Usage::

    qusense validate [--inject-fault perturb-mz] [--out DIR]
    qusense simulate --config run.json [--seed N] [--shards N] [--threads N] [--out DIR]
    qusense exact    --config run.json [--out DIR]
    qusense spectrum --config run.json [--seed N] [--shards N] [--out DIR]
    qusense plan     --config run.json [--threads N] [--out DIR]

Exit codes: 0 success, 1 invariant failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import RunConfig, build_noise, load_config
from .correlators import closedform_G2_series, closedform_G4_grid, exact_G2_series, exact_G4_grid
from .estimators import LagSeries, estimate_G2, estimate_G4, estimate_resonance_4th
from .noise import is_gaussian, make_rng, sample_phases
from .planner import PLAN_COLUMNS, plan_map
from .spectra import (
    dft1,
    dft3,
    optimal_n_f_2nd,
    optimal_n_f_4th,
    resonance_2nd,
    resonance_4th,
    shot_noise_2nd,
    shot_noise_4th,
)
from .trajectories import PhysicalityError, default_threads, mc_run, run_noise_phases
from .validate import FAULTS, run_checks

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("qusense")


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def write_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _lag_rows(series: LagSeries, columns: dict[str, np.ndarray] | None = None):
    extra = columns or {}
    for i, lag in enumerate(series.lags):
        yield [lag, lag * series.dt, series.values[i], series.stderr[i], *(c[i] for c in extra.values())]


def _grid_rows(values: np.ndarray, stderr: np.ndarray | None = None, extra: np.ndarray | None = None):
    n_u, n_v, n_w = values.shape
    for u in range(n_u):
        for v in range(n_v):
            for w in range(n_w):
                row = [u + 1, v + 1, w + 1, values[u, v, w], 0.0 if stderr is None else stderr[u, v, w]]
                if extra is not None:
                    row.append(extra[u, v, w])
                yield row


def _summary(cfg: RunConfig, command: str, started: float, **extra) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": cfg.model_dump(mode="json"),
        "seed": cfg.seed,
        "shards": cfg.shards,
        "wall_time_s": time.perf_counter() - started,
        **extra,
    }


def _exact_noise_kwargs(cfg: RunConfig, params, noise, n_shots: int) -> dict:
    """Non-Gaussian noise has no closed pair averages; average over sampled paths instead."""
    if is_gaussian(noise):
        return {}
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.exact_paths)
    paths = np.array([sample_phases(noise, n_shots, params.tau, make_rng(s)).phases for s in seeds])
    return {"paths": paths}


def _is_fourth(cfg: RunConfig) -> bool:
    return tuple(cfg.sequence.pattern) == ("xy", "xz")


def cmd_validate(args) -> int:
    results = run_checks(inject_fault=args.inject_fault, seed=args.seed or 0)
    report = {"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}
    if args.out:
        write_json(Path(args.out) / "validate.json", report)
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def cmd_simulate(cfg: RunConfig, out: Path, threads: int) -> int:
    cfg.require("params")
    started = time.perf_counter()
    params, noise, seq = cfg.params.build(), build_noise(cfg.noise), cfg.sequence.build()
    record = mc_run(seq, params, noise, cfg.seed, cfg.shards, threads=threads, mode=cfg.mode)
    write_csv(out / "records.csv", ("cycle", "slot", "label", "s"), record.rows())
    extra = {}
    if _is_fourth(cfg):
        n_u, n_v, n_w = cfg.grid
        grid = estimate_G4(record, n_u, n_v, n_w, tau=params.tau)
        write_csv(out / "g4_grid.csv", ("u", "v", "w", "value", "stderr"), _grid_rows(grid.values, grid.stderr))
        extra["windows"] = grid.windows
        extra["max_abs_z"] = float(np.max(np.abs(grid.values / grid.stderr)))
    elif tuple(cfg.sequence.pattern) == ("xy",):
        series = estimate_G2(record, cfg.max_lag, tau=params.tau)
        write_csv(out / "g2_lags.csv", ("lag", "t", "value", "stderr"), _lag_rows(series))
        extra["windows"] = series.windows
    if cfg.export_noise:
        phases = run_noise_phases(seq, params, noise, cfg.seed)
        write_csv(out / "noise_path.csv", ("shot_index", "phi"), enumerate(phases))
    summary = _summary(cfg, "simulate", started, n_cycles=record.n_cycles, **extra)
    write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_exact(cfg: RunConfig, out: Path, threads: int) -> int:
    cfg.require("params")
    started = time.perf_counter()
    params, noise = cfg.params.build(), build_noise(cfg.noise)
    if _is_fourth(cfg):
        n_u, n_v, n_w = cfg.grid
        kw = _exact_noise_kwargs(cfg, params, noise, 2 * (n_u + n_v + n_w) + 1)
        exact = exact_G4_grid(n_u, n_v, n_w, params, noise, mode=cfg.mode, **kw)
        u, v, w = np.meshgrid(np.arange(1, n_u + 1), np.arange(1, n_v + 1), np.arange(1, n_w + 1), indexing="ij")
        closed = closedform_G4_grid(u, v, w, params, noise)
        write_csv(
            out / "g4_grid.csv", ("u", "v", "w", "value", "stderr", "closedform"), _grid_rows(exact, None, closed)
        )
        extra = {"max_abs": float(np.max(np.abs(exact)))}
    else:
        kw = _exact_noise_kwargs(cfg, params, noise, cfg.max_lag + 1)
        exact = exact_G2_series(cfg.max_lag, params, noise, mode=cfg.mode, **kw)
        lags = np.arange(0, cfg.max_lag + 1)
        closed = closedform_G2_series(lags, params, noise)
        series = LagSeries.from_values(exact, params.tau, start=1)
        write_csv(out / "g2_lags.csv", ("lag", "t", "value", "stderr", "closedform"), _lag_rows(series, {"c": closed}))
        extra = {"max_abs": float(np.max(np.abs(exact)))}
    write_json(out / "summary.json", _summary(cfg, "exact", started, **extra))
    return EXIT_OK


def _spectrum_2nd(cfg: RunConfig, out: Path, threads: int) -> dict:
    params, noise, spec = cfg.params.build(), build_noise(cfg.noise), cfg.spectrum
    n_f = spec.n_f or optimal_n_f_2nd(params)
    if spec.source == "closedform":
        series = LagSeries.from_values(closedform_G2_series(np.arange(n_f), params, noise), params.tau)
    elif spec.source == "exact":
        kw = _exact_noise_kwargs(cfg, params, noise, n_f + 1)
        values = exact_G2_series(n_f, params, noise, mode=cfg.mode, **kw)
        series = LagSeries.from_values(values, params.tau, start=1)
    else:
        if tuple(cfg.sequence.pattern) != ("xy",):
            raise ConfigError("second-order spectra from simulation need sequence.pattern ['xy']")
        record = mc_run(cfg.sequence.build(), params, noise, cfg.seed, cfg.shards, threads=threads, mode=cfg.mode)
        series = estimate_G2(record, n_f, tau=params.tau)
    if spec.include_zero_lag and np.isnan(series.values[0]):
        raise ConfigError("the exact engine has no lag-0 value; set include_zero_lag to false")
    omega = spec.omega.build() if spec.omega else None
    spectrum = dft1(series, n_f, omega, include_zero_lag=spec.include_zero_lag)
    rows = (
        (w, v.real, v.imag, abs(v), e) for w, v, e in zip(spectrum.omega, spectrum.values, spectrum.stderr)
    )
    write_csv(out / "spectrum.csv", ("omega", "re", "im", "abs", "stderr"), rows)
    at_w0 = dft1(series, n_f, [params.omega0], include_zero_lag=spec.include_zero_lag).values[0]
    report = {
        "n_f": n_f,
        "resonance": {"re": at_w0.real, "im": at_w0.imag},
        "resonance_formula": resonance_2nd(params, noise),
    }
    if spec.source == "simulate":
        report["shot_noise_formula"] = shot_noise_2nd(n_f, series.windows)
    return report


def _spectrum_4th(cfg: RunConfig, out: Path, threads: int) -> dict:
    params, noise, spec = cfg.params.build(), build_noise(cfg.noise), cfg.spectrum
    d2, d1 = optimal_n_f_4th(params)
    n_f2, n_f1 = spec.n_f2 or d2, spec.n_f1 or d1
    omegas = (params.omega0, 0.0, params.omega0)
    report = {"n_f2": n_f2, "n_f1": n_f1, "omegas": list(omegas), "resonance_formula": resonance_4th(params, noise)}
    if spec.source == "simulate":
        if not _is_fourth(cfg):
            raise ConfigError("fourth-order spectra from simulation need sequence.pattern ['xy', 'xz']")
        record = mc_run(cfg.sequence.build(), params, noise, cfg.seed, cfg.shards, threads=threads, mode=cfg.mode)
        est = estimate_resonance_4th(record, n_f2, n_f1, omegas, tau=params.tau)
        value, stderr = est.value, est.stderr
        report["shot_noise_formula"] = shot_noise_4th(n_f2, n_f1, 2 * params.tau * est.windows, params.tau)
    else:
        if spec.source == "exact":
            kw = _exact_noise_kwargs(cfg, params, noise, 2 * (2 * n_f2 + n_f1) + 1)
            grid = exact_G4_grid(n_f2, n_f1, n_f2, params, noise, mode=cfg.mode, **kw)
        else:
            u, v, w = np.meshgrid(
                np.arange(1, n_f2 + 1), np.arange(1, n_f1 + 1), np.arange(1, n_f2 + 1), indexing="ij"
            )
            grid = closedform_G4_grid(u, v, w, params, noise)
        value, stderr = dft3(grid, omegas, dt=2 * params.tau), 0.0
    report["resonance"] = {"re": value.real, "im": value.imag, "abs": abs(value), "stderr": stderr}
    write_json(out / "resonance.json", report)
    return report


def cmd_spectrum(cfg: RunConfig, out: Path, threads: int) -> int:
    cfg.require("params", "spectrum")
    started = time.perf_counter()
    if cfg.spectrum.order == "2nd":
        report = _spectrum_2nd(cfg, out, threads)
    else:
        report = _spectrum_4th(cfg, out, threads)
    write_json(out / "summary.json", _summary(cfg, "spectrum", started, report=report))
    return EXIT_OK


def cmd_plan(cfg: RunConfig, out: Path, threads: int) -> int:
    cfg.require("plan")
    started = time.perf_counter()
    plan = cfg.plan
    s_c, gamma0 = plan.s_c.build(), plan.gamma0.build()
    if np.any(s_c < 0) or np.any(gamma0 < 0):
        raise ConfigError("plan grids must be non-negative")
    points = []
    for order in plan.orders:
        points.extend(plan_map(order, s_c, gamma0, plan.a, plan.gm_max, threads=threads))
    write_csv(out / "plan.csv", PLAN_COLUMNS, ([p.row()[k] for k in PLAN_COLUMNS] for p in points))
    counts = {o: sum(1 for p in points if p.order == o and not p.feasible) for o in plan.orders}
    write_json(out / "summary.json", _summary(cfg, "plan", started, infeasible_cells=counts, cells=len(points)))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "exact": cmd_exact, "spectrum": cmd_spectrum, "plan": cmd_plan}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qusense", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config: bool = True):
        p.add_argument("--config", required=needs_config, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("--shards", type=int, default=None, help="number of shards (overrides the config)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker count (default: QUSENSE_THREADS or CPUs)")
        p.add_argument("-v", "--verbose", action="store_true")

    val = sub.add_parser("validate", help="run the invariant self-checks")
    common(val, needs_config=False)
    val.add_argument("--inject-fault", choices=FAULTS, default=None, help="corrupt the engine to test the checks")
    for name, helptext in (
        ("simulate", "Monte Carlo shot records and correlation estimates"),
        ("exact", "exact and closed-form correlations"),
        ("spectrum", "correlation spectra and resonance values"),
        ("plan", "optimal acquisition-time maps"),
    ):
        common(sub.add_parser(name, help=helptext))
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.shards is not None:
        updates["shards"] = args.shards
    if not updates:
        return cfg
    return RunConfig.model_validate({**cfg.model_dump(mode="json"), **updates})


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    if args.command == "validate":
        return cmd_validate(args)
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out = Path(args.out or ".")
        return COMMANDS[args.command](cfg, out, threads)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            print(f"config error at {loc}: {err['msg']}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicalityError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
