"""Command-line entry point: run one system on a synthetic workload and emit CSV."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import HtapError
from .harness import SYSTEMS, IDEAL_FLAGS, SystemConfig, WorkloadSpec, emit_csv, emit_plot_data, \
    generate_workload, plot_data, run
from .harness.report import PLOT_FIELDS, format_csv, report_row
from .harness.systems import CSV_FIELDS
from .vaultsim import PRESET_DIR, SimConfig


class UsageError(HtapError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep usage errors machine-readable too
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    d = WorkloadSpec()
    p = _Parser(prog="htapsim", description=__doc__)
    p.add_argument("--system", choices=SYSTEMS, default="polynesia")
    p.add_argument("--placement", choices=("local", "distributed", "hybrid"), default="hybrid")
    p.add_argument("--scheduler", choices=("basic", "optimized"), default="optimized")
    p.add_argument("--txn-threads", type=int, default=d.txn_threads)
    p.add_argument("--txn-queries", type=int, default=d.txn_queries, help="per transactional thread")
    p.add_argument("--update-ratio", type=float, default=d.update_ratio)
    p.add_argument("--anl-threads", type=int, default=d.anl_threads)
    p.add_argument("--anl-queries", type=int, default=d.anl_queries, help="per analytical thread")
    p.add_argument("--rows", type=int, default=d.rows, help="rows per table")
    p.add_argument("--vaults", type=int, help="override n_vaults from the config")
    p.add_argument("--group-size", type=int, help="override group_size from the config")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--config", help="key=value cost-model file, or the name of a bundled preset")
    p.add_argument("--ideal", default="", help=f"comma list of zero-cost mechanisms: {', '.join(IDEAL_FLAGS)}")
    p.add_argument("--out", help="CSV file to append to (default: stdout)")
    p.add_argument("--dump-config", action="store_true", help="print the effective cost model and exit")
    p.add_argument("--plot-data", action="store_true",
                   help="run the per-figure sweeps and write their series instead of a single run")
    return p


def load_config(arg: str | None) -> SimConfig:
    if arg is None:
        return SimConfig()
    path = Path(arg)
    if not path.exists() and (PRESET_DIR / f"{arg}.conf").exists():
        path = PRESET_DIR / f"{arg}.conf"
    return SimConfig.load(path)


def _sim(args) -> SimConfig:
    sim = load_config(args.config)
    over = {k: v for k, v in (("n_vaults", args.vaults), ("group_size", args.group_size)) if v is not None}
    return sim.with_overrides(**over) if over else sim


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        sim = _sim(args)
        if args.dump_config:
            sys.stdout.write(sim.dump())
            return 0
        if args.plot_data:
            points = plot_data(sim, seed=args.seed)
            if args.out:
                emit_plot_data(points, args.out)
            else:
                sys.stdout.write(format_csv(PLOT_FIELDS, points))
            return 0
        spec = WorkloadSpec(txn_threads=args.txn_threads, txn_queries=args.txn_queries,
                            update_ratio=args.update_ratio, anl_threads=args.anl_threads,
                            anl_queries=args.anl_queries, rows=args.rows, seed=args.seed)
        ideal = frozenset(f for f in args.ideal.split(",") if f)
        cfg = SystemConfig(args.system, args.placement, args.scheduler, sim, ideal)
        cfg.validate()
        report = run(cfg, generate_workload(spec))
        if args.out:
            emit_csv(report, args.out)
        else:
            sys.stdout.write(format_csv(CSV_FIELDS, [report_row(report)]))
        return 0
    except HtapError as e:
        print(json.dumps({"error": e.code, "message": str(e)}), file=sys.stderr)
        return 2

