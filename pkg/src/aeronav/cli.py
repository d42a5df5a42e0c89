"""Command-line front end.

  aeronav run <config.json>        run one scenario, write logs, exit 0 on PASS
  aeronav suite <dir|builtin>      run every config in a directory (or the
                                   built-in replica battery) as a regression
  aeronav plot <runlog.csv>        render an SVG trajectory plot
  aeronav gen-tunnel <shape>       synthesize a tunnel cloud to an .xyz file

AERONAV_OUTPUT_DIR overrides the output directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .harness.config import load_config
from .harness.runlog import RunLog, emit
from .harness.runner import run
from .tunnels import generate_tunnel


def _out_dir(cfg_output: dict, override: str | None) -> Path:
    env = os.environ.get("AERONAV_OUTPUT_DIR")
    base = override or env or cfg_output.get("dir") or "runs"
    return Path(base)


def _write_outputs(result, cfg, out_dir: Path) -> list[Path]:
    name = cfg.get("name", "run")
    written = []
    out = cfg.get("output", {})
    if out.get("csv", True) and result.log.records:
        written.append(emit(result.log, "csv", out_dir / f"{name}.csv"))
    if out.get("jsonl") and result.log.records:
        written.append(emit(result.log, "jsonl", out_dir / f"{name}.jsonl"))
    if out.get("svg"):
        written.append(emit(result.log, "svg", out_dir / f"{name}.svg"))
    summary = {"name": name, "passed": result.passed, "metrics": result.metrics,
               "monitors": [{"name": m.name, "passed": m.passed,
                             "detail": m.detail} for m in result.monitors]}
    spath = out_dir / f"{name}.summary.json"
    spath.parent.mkdir(parents=True, exist_ok=True)
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    written.append(spath)
    return written


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    t0 = time.perf_counter()
    result = run(cfg)
    wall = time.perf_counter() - t0
    out_dir = _out_dir(cfg.get("output", {}), args.out)
    _write_outputs(result, cfg, out_dir)
    status = "PASS" if result.passed else "FAILED"
    print(f"{cfg.get('name', 'run')}: {status} ({wall:.1f}s)")
    for m in result.monitors:
        print(f"  [{'ok' if m.passed else 'FAIL'}] {m.name}: {m.detail}")
    return 0 if result.passed else 1


def cmd_suite(args) -> int:
    if args.dir == "builtin":
        from .harness.scenarios import all_scenarios
        configs = all_scenarios()
    else:
        configs = {}
        for path in sorted(Path(args.dir).glob("*.json")):
            configs[path.stem] = load_config(path)
    out_dir = _out_dir({}, args.out)
    failures = 0
    for name, cfg in configs.items():
        t0 = time.perf_counter()
        result = run(cfg)
        wall = time.perf_counter() - t0
        _write_outputs(result, cfg, out_dir)
        status = "PASS" if result.passed else "FAILED"
        if not result.passed:
            failures += 1
        print(f"{name}: {status} ({wall:.1f}s)")
    print(f"{len(configs) - failures}/{len(configs)} scenarios passed")
    return 0 if failures == 0 else 1


def cmd_plot(args) -> int:
    log = RunLog.from_csv(args.runlog)
    out = Path(args.out) if args.out else Path(args.runlog).with_suffix(".svg")
    emit(log, "svg", out)
    print(out)
    return 0


def cmd_gen_tunnel(args) -> int:
    kw = {}
    if args.density:
        kw["density"] = args.density
    cloud = generate_tunnel(args.shape, radius=args.radius, length=args.length, **kw)
    out = Path(args.out or f"{args.shape}.xyz")
    cloud.save_xyz(out)
    meta = {"shape": cloud.shape, "points": int(len(cloud.points)),
            "axis_length": cloud.length, "nominal_radius": cloud.nominal_radius,
            "closed": cloud.closed}
    with open(out.with_suffix(".json"), "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    print(f"{out} ({len(cloud.points)} points, axis {cloud.length:.1f} m)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aeronav",
                                     description="navigation scenario engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_suite = sub.add_parser("suite", help="run a directory of configs (or 'builtin')")
    p_suite.add_argument("dir")
    p_suite.add_argument("--out", default=None)
    p_suite.set_defaults(func=cmd_suite)

    p_plot = sub.add_parser("plot", help="render a run log as SVG")
    p_plot.add_argument("runlog")
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(func=cmd_plot)

    p_gen = sub.add_parser("gen-tunnel", help="write a synthetic tunnel cloud")
    p_gen.add_argument("shape")
    p_gen.add_argument("--radius", type=float, default=2.0)
    p_gen.add_argument("--length", type=float, default=40.0)
    p_gen.add_argument("--density", type=float, default=None)
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_gen_tunnel)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
