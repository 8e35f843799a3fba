"""Command-line entry point: ``aerial-ris {run,gradcheck,oracle}``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, parse_seeds
from .oracles import gradient_check, grid_oracle, single_user_alignment
from .schemes import KINDS, RATE_UNIT, SchemeSpec, compare_schemes

TRACE_COLUMNS = (
    "scheme", "seed", "iteration", "F_mbps", "min_rate_mbps", "avg_rate_mbps", "gamma",
    "x", "y", "z", "roll", "pitch", "yaw",
)
FINAL_COLUMNS = (
    "scheme", "seed", "iterations", "converged", "min_rate_mbps", "avg_rate_mbps",
    "x", "y", "z", "roll", "pitch", "yaw", "horizontal_distance_m",
)

ALIGNMENT_TARGET = 0.95
GRID_TOLERANCE = 0.01


def _num(v: float) -> str:
    # repr is the shortest round-tripping form, so files are stable across runs.
    return repr(float(v))


def _pose(x) -> list[str]:
    return [_num(v) for v in (*x.position, *x.orientation)]


def trace_rows(summary):
    """Records sorted by (scheme, seed, iteration)."""
    rows = []
    for r in sorted(summary.results, key=lambda r: (KINDS.index(r.scheme), r.seed)):
        tr = r.trace
        for l, (f, m, g, x) in enumerate(zip(tr.objective, tr.metrics, tr.gamma, r.points)):
            rows.append(
                [r.scheme, str(r.seed), str(l), _num(f), _num(m["min_rate"] / RATE_UNIT),
                 _num(m["avg_rate"] / RATE_UNIT), "" if math.isnan(g) else _num(g), *_pose(x)]
            )
    return rows


def final_rows(summary, bs_position):
    rows = []
    for r in sorted(summary.results, key=lambda r: (KINDS.index(r.scheme), r.seed)):
        x = r.final
        dist = float(np.hypot(*(x.position[:2] - bs_position[:2])))
        rows.append(
            [r.scheme, str(r.seed), str(len(r.trace) - 1), str(r.trace.converged).lower(),
             _num(r.min_rate / RATE_UNIT), _num(r.avg_rate / RATE_UNIT), *_pose(x), _num(dist)]
        )
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _finite_json(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_json(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _finite_json(obj.item())
    return obj


def _resolve(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "seeds", None) is not None:
        cfg = replace(cfg, seeds=parse_seeds(args.seeds))
    if getattr(args, "seed_list", None) is not None:
        cfg = replace(cfg, seeds=parse_seeds(args.seed_list))
    if getattr(args, "scheme", None) and args.scheme != "all":
        kind = args.scheme.upper()
        chosen = tuple(s for s in cfg.schemes if s.kind == kind) or (SchemeSpec(kind),)
        cfg = replace(cfg, schemes=chosen)
    if getattr(args, "max_iters", None) is not None:
        if args.max_iters < 1:
            raise ConfigError(f"--max-iters must be >= 1, got {args.max_iters}")
        cfg = replace(cfg, solver=replace(cfg.solver, max_iters=args.max_iters))
    if getattr(args, "p_exponent", None) is not None:
        try:
            cfg = replace(cfg, smoothing=replace(cfg.smoothing, p=args.p_exponent))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if getattr(args, "starts", None) is not None:
        if args.starts < 1:
            raise ConfigError(f"--starts must be >= 1, got {args.starts}")
        cfg = replace(cfg, starts=args.starts)
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        cfg = replace(cfg, workers=args.workers)
    return cfg


def cmd_run(args) -> int:
    cfg = _resolve(args)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc

    start = time.perf_counter()
    summary = compare_schemes(
        cfg.scenario, cfg.seeds, cfg.schemes, cfg.solver, cfg.smoothing, workers=cfg.workers, starts=cfg.starts
    )
    elapsed = time.perf_counter() - start

    bs = np.array([0.0, 0.0, cfg.scenario.bs_height])
    files = {
        "traces.csv": lambda p: _write_csv(p, TRACE_COLUMNS, trace_rows(summary)),
        "finals.csv": lambda p: _write_csv(p, FINAL_COLUMNS, final_rows(summary, bs)),
        "summary.json": lambda p: p.write_text(json.dumps(_finite_json(summary.to_dict()), indent=2) + "\n"),
    }
    try:
        for name, write in files.items():
            write(out / name)
        manifest = {
            "tool": "aerial-ris",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "seeds": list(cfg.seeds),
            "config": cfg.snapshot(),
            "wall_time_s": {"total": elapsed, "runs": [
                {"scheme": r.scheme, "seed": r.seed, "seconds": r.wall_time} for r in summary.results
            ]},
            "files": {name: {"sha256": _sha256(out / name), "bytes": (out / name).stat().st_size} for name in files},
        }
        (out / "manifest.json").write_text(json.dumps(_finite_json(manifest), indent=2) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write outputs to {out}: {exc}") from exc

    for kind, fin in summary.finals.items():
        print(f"{kind:4s} mean min rate {fin['min_rate'] / RATE_UNIT:8.3f} Mbit/s  "
              f"mean avg rate {fin['avg_rate'] / RATE_UNIT:8.3f} Mbit/s")
    for name, g in summary.gains.items():
        print(f"{name}: min-rate gain {100 * g['min_rate']:+.1f}%  avg-rate gain {100 * g['avg_rate']:+.1f}%")
    print(f"wrote {', '.join(list(files) + ['manifest.json'])} to {out} ({elapsed:.1f} s)")
    return 0


def cmd_gradcheck(args) -> int:
    if args.points < 1:
        raise ConfigError(f"--points must be >= 1, got {args.points}")
    if not args.tolerance > 0:
        raise ConfigError(f"--tolerance must be positive, got {args.tolerance}")
    cfg = _resolve(args)
    checks = gradient_check(args.points, args.seed, cfg.scenario, cfg.smoothing)
    worst = max(checks, key=lambda c: c.rel_error)
    ok = worst.rel_error <= args.tolerance
    print(f"points: {len(checks)}  tolerance: {args.tolerance:.3g}")
    print(f"worst relative error {worst.rel_error:.3e} at point {worst.index}: "
          f"position {np.round(worst.point.position, 3).tolist()}, "
          f"orientation {np.round(worst.point.orientation, 4).tolist()}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    if args.grid_resolution <= 0:
        raise ConfigError(f"--grid-resolution must be positive, got {args.grid_resolution}")
    cfg = _resolve(args)
    align = single_user_alignment(range(args.alignment_cases), cfg.scenario, sp=cfg.smoothing)
    grid = grid_oracle(range(args.grid_cases), args.grid_resolution, cfg.scenario, sp=cfg.smoothing)
    align_ok = all(c.ratio >= ALIGNMENT_TARGET for c in align)
    grid_ok = all(c.shortfall <= GRID_TOLERANCE for c in grid)
    for c in align:
        print(f"alignment seed {c.seed}: SNR {c.snr:.6e} / bound {c.bound:.6e} = {c.ratio:.6f}")
    for c in grid:
        print(f"grid seed {c.seed}: optimizer {c.optimizer_rate / RATE_UNIT:.6f} Mbit/s, "
              f"grid best {c.grid_rate / RATE_UNIT:.6f} Mbit/s ({c.resolution_deg:g} deg), shortfall {c.shortfall:+.2e}")
    print(f"alignment: {'PASS' if align_ok else 'FAIL'}  grid: {'PASS' if grid_ok else 'FAIL'}")
    return 0 if align_ok and grid_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aerial-ris", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (defaults apply when omitted)")
    common.add_argument("--p-exponent", type=float, help="p-norm exponent (negative)")

    run = sub.add_parser("run", parents=[common], help="run the scheme comparison")
    run.add_argument("--out", default="results", help="output directory")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    seeds.add_argument("--seed-list", help="comma separated seeds")
    run.add_argument("--scheme", choices=["plo", "pl", "po", "all"], default="all")
    run.add_argument("--max-iters", type=int)
    run.add_argument("--starts", type=int, help="seeded starting points per run (best kept)")
    run.add_argument("--workers", type=int, help="processes for independent seeds")
    run.set_defaults(func=cmd_run)

    grad = sub.add_parser("gradcheck", parents=[common], help="analytic vs finite-difference phase gradient")
    grad.add_argument("--tolerance", type=float, default=1e-5)
    grad.add_argument("--points", type=int, default=20)
    grad.add_argument("--seed", type=int, default=0)
    grad.set_defaults(func=cmd_gradcheck)

    ora = sub.add_parser("oracle", parents=[common], help="closed-form and grid-search checks")
    ora.add_argument("--grid-resolution", type=float, default=1.0, help="degrees")
    ora.add_argument("--alignment-cases", type=int, default=5)
    ora.add_argument("--grid-cases", type=int, default=3)
    ora.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
