"""Command line entry point: run scenarios, compare against the fixed-spacing
baseline, and turn run directories into plain-text plot data.

Exit codes: 0 clean, 1 bad config or missing input, 2 aborted run,
3 run finished but broke a guarantee (lost edge, disconnection,
collision or Lyapunov growth).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from collections import defaultdict
from pathlib import Path

from . import __version__
from .config import ScenarioConfig, dump_config, load_config, with_overrides
from .errors import ConfigError, SimulationAborted
from .graph import EventKind
from .metrics import MetricsSnapshot, epsilon, lyapunov_increases, time_to_threshold
from .sim import SimTrace, run, wrap_angle

log = logging.getLogger("flexflock")

CSV_VERSION = 1
THRESHOLD = 0.01

EXIT_OK, EXIT_CONFIG, EXIT_ABORTED, EXIT_VIOLATION = 0, 1, 2, 3


def _num(x):
    x = float(x)
    return repr(x) if math.isfinite(x) else str(x)


def _time(t):
    return f"{t:.10g}"


def _write_csv(path: Path, kind: str, header, rows):
    with path.open("w", newline="") as fh:
        fh.write(f"# flexflock {kind} v{CSV_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path: Path):
    with path.open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_trace(trace: SimTrace, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for t, P, U in zip(trace.times, trace.poses, trace.controls):
        for a in range(trace.n_agents):
            x, y, th = P[a]
            rows.append([_time(t), a, _num(x), _num(y), _num(wrap_angle(th)), _num(U[a, 0]), _num(U[a, 1])])
    _write_csv(out / "trace.csv", "trace", ["time", "agent", "x", "y", "theta", "v", "omega"], rows)

    rows = [
        [_time(t), i, j, _num(es.mu), _num(es.d), _num(es.s), _num(es.D_star), _num(es.e)]
        for t, edges in zip(trace.times, trace.edges)
        for (i, j), es in sorted(edges.items())
    ]
    _write_csv(out / "edges.csv", "edges", ["time", "i", "j", "mu", "d", "s", "D_star", "e"], rows)

    rows = [[_time(ev.time), ev.edge[0], ev.edge[1], ev.kind.value] for ev in trace.edge_events]
    _write_csv(out / "events.csv", "events", ["time", "i", "j", "kind"], rows)

    cols = MetricsSnapshot.columns()
    rows = []
    for m in trace.metrics:
        row = []
        for c in cols:
            val = getattr(m, c)
            if c == "t":
                row.append(_time(val))
            elif isinstance(val, bool):
                row.append(str(val).lower())
            elif isinstance(val, int):
                row.append(val)
            else:
                row.append(_num(val))
        rows.append(row)
    _write_csv(out / "metrics.csv", "metrics", cols, rows)


def _finite_or_none(x):
    return x if math.isfinite(x) else None


def summarize(trace: SimTrace, cfg: ScenarioConfig, wall: float):
    ms = trace.metrics
    final = ms[-1]
    max_mu = max((es.mu for edges in trace.edges for es in edges.values()), default=0.0)
    range_ok = cfg.topology != "dynamic" or max_mu < cfg.r
    increases = lyapunov_increases(trace)
    summary = {
        "name": cfg.name,
        "version": __version__,
        "status": trace.status,
        "error": trace.error,
        "t_final": round(final.t, 10),
        "E_dev": final.E_dev,
        "E_asp": final.E_asp,
        "epsilon": epsilon(final.E_dev, cfg.d_nom),
        "max_abs_e": final.max_abs_e,
        "connected_all": all(m.connected for m in ms),
        "collision_free": all(m.min_mu > 0 for m in ms),
        "in_range": range_ok,
        "min_mu": _finite_or_none(min(m.min_mu for m in ms)),
        "max_mu": max_mu,
        "peak_abs_v": max(m.max_abs_v for m in ms),
        "peak_abs_omega": max(m.max_abs_omega for m in ms),
        "edges_added": sum(ev.kind is EventKind.ADDED for ev in trace.edge_events),
        "removed_violations": len(trace.violations),
        "lyapunov_increases": len(increases),
        "s_range": [_finite_or_none(trace.s_min), _finite_or_none(trace.s_max)],
        "D_star_range": [_finite_or_none(trace.D_min), _finite_or_none(trace.D_max)],
        "recorded_steps": len(ms),
        "wall_seconds": round(wall, 3),
    }
    problems = []
    if trace.violations:
        problems.append(f"{len(trace.violations)} edge(s) left range")
    if not summary["connected_all"]:
        problems.append("graph disconnected")
    if not summary["collision_free"]:
        problems.append("collision (mu = 0) on a connected pair")
    if not range_ok:
        problems.append("connected pair reached mu >= r")
    if increases:
        problems.append(f"Lyapunov value grew on {len(increases)} recorded interval(s)")
    summary["violations"] = problems
    return summary


def execute(cfg: ScenarioConfig, out: Path):
    """Run one scenario into ``out``; returns ``(exit code, summary)``."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(cfg))
    t0 = time.perf_counter()
    try:
        trace = run(cfg)
    except SimulationAborted as exc:
        trace = exc.trace
    wall = time.perf_counter() - t0
    write_trace(trace, out)
    summary = summarize(trace, cfg, wall)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if trace.status != "ok":
        log.error("%s: %s", cfg.name, trace.error)
        return EXIT_ABORTED, summary
    if summary["violations"]:
        log.error("%s: %s", cfg.name, "; ".join(summary["violations"]))
        return EXIT_VIOLATION, summary
    return EXIT_OK, summary


def _load(args):
    cfg = load_config(args.config)
    return with_overrides(cfg, dt=args.dt, T=args.T, seed=args.seed)


def _out_dir(args, cfg):
    if args.out:
        return Path(args.out)
    return Path(cfg.output_dir or Path("runs") / cfg.name)


def cmd_run(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    code, summary = execute(cfg, out)
    print(
        f"{cfg.name}: status={summary['status']} E_asp={summary['E_asp']:.3g} "
        f"E_dev={summary['E_dev']:.3g} connected={str(summary['connected_all']).lower()} -> {out}"
    )
    for problem in summary["violations"]:
        print(f"violation: {problem}", file=sys.stderr)
    return code


def cmd_compare(args):
    cfg = _load(args)
    if cfg.topology != "static":
        raise ConfigError("compare needs a static-topology scenario")
    out = _out_dir(args, cfg)
    flex_cfg = with_overrides(cfg, spacing="asp")
    base_cfg = with_overrides(cfg, spacing="fixed")
    code_f, _ = execute(flex_cfg, out / "flexible")
    code_b, _ = execute(base_cfg, out / "baseline")

    flex = _read_csv(out / "flexible" / "metrics.csv")
    base = _read_csv(out / "baseline" / "metrics.csv")
    rows = [
        [f["t"], f["E_asp"], f["E_dev"], b["E_dev"]]
        for f, b in zip(flex, base)
    ]
    _write_csv(out / "compare.csv", "compare", ["time", "flexible_E_asp", "flexible_E_dev", "baseline_E_dev"], rows)

    times = [float(r[0]) for r in rows]
    t_flex = time_to_threshold(times, [float(r[1]) for r in rows], THRESHOLD)
    t_base = time_to_threshold(times, [float(r[3]) for r in rows], THRESHOLD)
    verdict = {
        "threshold": THRESHOLD,
        "flexible_time_to_threshold": _finite_or_none(t_flex),
        "baseline_time_to_threshold": _finite_or_none(t_base),
        "flexible_faster": t_flex < t_base,
    }
    (out / "compare.json").write_text(json.dumps(verdict, indent=2) + "\n")
    print(f"time to E < {THRESHOLD:g}: flexible={t_flex:g} baseline={t_base:g} -> {out}")
    return max(code_f, code_b)


def _wide(rows, key_of, value_col):
    """Pivot long rows into one row per time with a column per key."""
    times = []
    table = defaultdict(dict)
    keys = set()
    for r in rows:
        t = r["time"]
        if t not in table:
            times.append(t)
        k = key_of(r)
        keys.add(k)
        table[t][k] = r[value_col]
    keys = sorted(keys)
    return times, keys, [[t] + [table[t].get(k, "nan") for k in keys] for t in times]


def _write_dat(path: Path, header, rows):
    with path.open("w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in rows:
            fh.write(" ".join(str(x) for x in row) + "\n")


def cmd_plotdata(args):
    src = Path(args.dir)
    if not (src / "trace.csv").is_file() and (src / "flexible" / "trace.csv").is_file():
        run_dir = src / "flexible"
    else:
        run_dir = src
    needed = [run_dir / n for n in ("trace.csv", "edges.csv", "metrics.csv")]
    missing = [str(p) for p in needed if not p.is_file()]
    if missing:
        print(f"error: missing trace files: {', '.join(missing)}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else src / "plot"
    out.mkdir(parents=True, exist_ok=True)

    metric_times = [r["t"] for r in _read_csv(run_dir / "metrics.csv")]
    trace = _read_csv(run_dir / "trace.csv")
    times, agents, xs = _wide(trace, lambda r: int(r["agent"]), "x")
    _, _, ys = _wide(trace, lambda r: int(r["agent"]), "y")
    header = ["time"] + [f"{c}{a}" for a in agents for c in ("x", "y")]
    rows = [[x[0]] + [v for pair in zip(x[1:], y[1:]) for v in pair] for x, y in zip(xs, ys)]
    _write_dat(out / "trajectories.dat", header, rows)

    edges = _read_csv(run_dir / "edges.csv")
    pair = lambda r: (int(r["i"]), int(r["j"]))  # noqa: E731
    for name, col in (("errors", "e"), ("mu", "mu"), ("s", "s")):
        _, keys, rows = _wide(edges, pair, col)
        by_time = {r[0]: r for r in rows}
        # every recorded time gets a row, even before any edge exists
        rows = [by_time.get(t, [t] + ["nan"] * len(keys)) for t in metric_times]
        _write_dat(out / f"{name}.dat", ["time"] + [f"{col}_{i}_{j}" for i, j in keys], rows)

    written = 4
    if (src / "compare.csv").is_file():
        cmp_rows = _read_csv(src / "compare.csv")
        cols = ["time", "flexible_E_asp", "flexible_E_dev", "baseline_E_dev"]
        _write_dat(out / "energy.dat", cols, [[r[c] for c in cols] for r in cmp_rows])
        written += 1
    print(f"wrote {written} data files to {out}")
    return EXIT_OK


def cmd_validate(args):
    cfg = _load(args)
    print(f"{cfg.name}: ok")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="flexflock", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--config", required=True, help="YAML file or bundled scenario name")
        p.add_argument("--out", help="output directory (default: runs/<name>)")
        p.add_argument("--dt", type=float)
        p.add_argument("--T", type=float)
        p.add_argument("--seed", type=int)

    scenario_flags(sub.add_parser("run", help="simulate one scenario"))
    scenario_flags(sub.add_parser("compare", help="adaptive vs fixed spacing on a static scenario"))
    scenario_flags(sub.add_parser("validate", help="check a config without running it"))
    p = sub.add_parser("plotdata", help="emit whitespace-separated plot data from a run directory")
    p.add_argument("dir", help="directory written by run or compare")
    p.add_argument("--out", help="output directory (default: <dir>/plot)")
    return parser


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "plotdata": cmd_plotdata, "validate": cmd_validate}


def main(argv=None):
    level = os.environ.get("FLEXFLOCK_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        for problem in exc.violations:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
