"""Command-line front end.

    irlmrac run --scenario case1 --out runs/case1
    irlmrac sweep --scenario case1 --grid critic_rate=0.25,0.5 --grid actor_rate=0.25,0.5
    irlmrac validate --config my.yaml --set critic_rate=0.3

Exit codes: 0 success, 2 invalid configuration or grid, 3 diverged run.
"""

import argparse
import csv
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from irlmrac import config as cfgmod
from irlmrac.errors import ConfigError
from irlmrac.harness import metrics, run_episode, write_csv

log = logging.getLogger("irlmrac")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3
OUTPUT_ROOT_ENV = "IRLMRAC_OUTPUT_ROOT"

GRID_KEYS = {
    "actor_rate": "actor_rate",
    "zeta_a": "actor_rate",
    "critic_rate": "critic_rate",
    "zeta_c": "critic_rate",
    "dt": "dt",
    "period": "reference.period",
    "reference.period": "reference.period",
    "mode": "update.mode",
    "update.mode": "update.mode",
}

AGGREGATE_METRICS = ("status", "settling_step", "mean_abs_error_final", "max_abs_control",
                     "mean_abs_residual_final")


def _overrides(args):
    items = list(args.set or [])
    if getattr(args, "mode", None):
        items.append(f"update.mode={args.mode}")
    return items


def _load(args, extra=()):
    if args.config is None and args.scenario is None:
        args.scenario = "case1"
    return cfgmod.load_config(scenario=args.scenario, path=args.config,
                              overrides=_overrides(args) + list(extra))


def _default_out(name):
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs")) / name


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def execute(cfg, out_dir, plots=True):
    """Run one episode and write its artifacts; returns the summary metrics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    episode = run_episode(cfg)
    write_csv(episode, out / "trajectory.csv")
    summary = metrics(episode)
    report = {"scenario": cfg.name, **summary, "config": cfgmod.to_dict(cfg)}
    with open(out / "summary.txt", "w") as f:
        yaml.safe_dump(_clean(report), f, sort_keys=False, default_flow_style=None)
    if plots:
        from irlmrac.plotting import plot_episode
        plot_episode(episode, out)
    return summary


def cmd_run(args):
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else _default_out(cfg.name)
    summary = execute(cfg, out, plots=not args.no_plots)
    print(f"{cfg.name}: {summary['status']}, settling step {summary['settling_step']}, "
          f"final mean |e| {summary['mean_abs_error_final']:.4g} -> {out}")
    return EXIT_DIVERGED if summary["status"].startswith("diverged") else EXIT_OK


def parse_grid(items):
    """``["critic_rate=0.25,0.5", ...]`` -> ordered list of (config key, values)."""
    grid = []
    for item in items or ():
        key, sep, values = item.partition("=")
        key = key.strip()
        if not sep or key not in GRID_KEYS:
            raise ConfigError(f"grid entry {item!r} must be key=v1,v2,... with key in "
                              f"{sorted(GRID_KEYS)}")
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"grid entry {item!r} has no values")
        target = GRID_KEYS[key]
        if any(target == t for t, _ in grid):
            raise ConfigError(f"grid key {key!r} given twice")
        grid.append((target, vals))
    if not grid:
        raise ConfigError("sweep needs at least one --grid entry")
    return grid


def _run_cell(job):
    cfg, out, plots = job
    return execute(cfg, out, plots)


def cmd_sweep(args):
    try:
        grid = parse_grid(args.grid)
        cells = []
        for i, combo in enumerate(itertools.product(*(vals for _, vals in grid))):
            assignment = [f"{key}={val}" for (key, _), val in zip(grid, combo)]
            cells.append((i, dict(zip((k for k, _ in grid), combo)), _load(args, assignment)))
    except ConfigError as exc:
        print(f"invalid sweep: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else _default_out(f"{cells[0][2].name}_sweep")
    jobs = [(cfg, out / f"cell_{i:03d}", not args.no_plots) for i, _, cfg in cells]
    workers = max(1, min(args.jobs, len(jobs)))
    if workers == 1:
        results = [_run_cell(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    keys = [k for k, _ in grid]
    with open(out / "aggregate.csv", "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["cell", *keys, *AGGREGATE_METRICS])
        for (i, values, _), summary in zip(cells, results):
            row = [f"cell_{i:03d}", *(values[k] for k in keys)]
            row += ["" if summary[m] is None else summary[m] for m in AGGREGATE_METRICS]
            writer.writerow(row)
    print(f"{len(cells)} cells -> {out / 'aggregate.csv'}")
    return EXIT_OK


def cmd_validate(args):
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {cfg.name}")
    return EXIT_OK


def _source_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", choices=cfgmod.SCENARIOS, help="bundled scenario")
    src.add_argument("--config", help="path to a YAML experiment file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry by dotted key path (repeatable)")
    p.add_argument("--mode", choices=("residual", "as_printed"), help="update law variant")


def build_parser():
    parser = argparse.ArgumentParser(prog="irlmrac", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    _source_args(p)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<name>)")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter grid")
    _source_args(p)
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2",
                   help=f"grid axis, key in {sorted(set(GRID_KEYS.values()))}")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a configuration")
    _source_args(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
