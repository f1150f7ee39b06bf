"""CSV output and the parameter sweeps behind the plot-data series.

The sweeps are plain functions so the acceptance tests and ``--plot-data``
produce exactly the same numbers.
"""
from __future__ import annotations

import csv
import io
from dataclasses import replace
from pathlib import Path
from typing import Iterable, NamedTuple

from ..errors import IoFailure
from ..vaultsim import SimConfig
from .systems import CSV_FIELDS, SYSTEMS, MetricsReport, SystemConfig, run
from .workload import WorkloadSpec, generate_workload

PLOT_FIELDS = ("figure", "series", "x", "metric", "value")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form, always '.' as separator
    return str(v)


def format_csv(header: tuple[str, ...] | None, rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _write(path: str | Path, header: tuple[str, ...], rows: Iterable[Iterable], append: bool) -> None:
    path = Path(path)
    try:
        fresh = not append or not path.exists() or path.stat().st_size == 0
        text = format_csv(header if fresh else None, rows)
        with path.open("w" if fresh else "a", newline="") as f:
            f.write(text)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from None


def report_row(r: MetricsReport) -> list:
    return [getattr(r, k) for k in CSV_FIELDS]


def emit_csv(reports: MetricsReport | Iterable[MetricsReport], path: str | Path, append: bool = True) -> None:
    """Write one row per report; the header is written only when the file is new or empty."""
    if isinstance(reports, MetricsReport):
        reports = [reports]
    _write(path, CSV_FIELDS, (report_row(r) for r in reports), append)


class Point(NamedTuple):
    figure: str
    series: str
    x: float
    metric: str
    value: float


def emit_plot_data(points: Iterable[Point], path: str | Path) -> None:
    _write(path, PLOT_FIELDS, points, append=False)


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


def snapshot_sweep(base: WorkloadSpec, sim: SimConfig, counts=(8, 16, 32)) -> list[Point]:
    """Full-copy snapshot system: transactional throughput against its zero-cost-snapshot twin."""
    out = []
    for n in counts:
        wl = generate_workload(replace(base, anl_queries=n))
        r = run(SystemConfig("si-ss", sim=sim), wl)
        i = run(SystemConfig("si-ss", sim=sim, ideal=frozenset({"snapshot"})), wl)
        out.append(Point("snapshot", "si-ss", n, "norm_txn_throughput", _ratio(r.txn_throughput, i.txn_throughput)))
        out.append(Point("snapshot", "si-ss", n, "snapshot_bytes", float(r.snapshot_bytes)))
    return out


def mvcc_sweep(base: WorkloadSpec, sim: SimConfig, txn_counts=(40, 160, 640)) -> list[Point]:
    """Version-chain system: analytical throughput against zero-cost versioning, plus chain length."""
    out = []
    for q in txn_counts:
        wl = generate_workload(replace(base, txn_queries=q))
        r = run(SystemConfig("si-mvcc", sim=sim), wl)
        i = run(SystemConfig("si-mvcc", sim=sim, ideal=frozenset({"mvcc"})), wl)
        out.append(Point("mvcc", "si-mvcc", q, "norm_anl_throughput", _ratio(r.anl_throughput, i.anl_throughput)))
        out.append(Point("mvcc", "si-mvcc", q, "mean_chain_length", r.mean_chain_length))
    return out


def propagation_sweep(base: WorkloadSpec, sim: SimConfig, ratios=(0.5, 0.8, 1.0),
                      systems=("mi-sw", "polynesia")) -> list[Point]:
    """Transactional throughput loss relative to zero-cost propagation, per update ratio."""
    out = []
    for ur in ratios:
        wl = generate_workload(replace(base, update_ratio=ur))
        for s in systems:
            r = run(SystemConfig(s, sim=sim), wl)
            i = run(SystemConfig(s, sim=sim, ideal=frozenset({"propagation"})), wl)
            out.append(Point("propagation", s, ur, "norm_txn_throughput",
                             _ratio(r.txn_throughput, i.txn_throughput)))
    return out


PLACEMENTS = (("local", "basic"), ("local", "optimized"), ("distributed", "basic"), ("distributed", "optimized"),
              ("hybrid", "basic"), ("hybrid", "optimized"))


def placement_sweep(base: WorkloadSpec, sim: SimConfig, combos=PLACEMENTS) -> list[Point]:
    """Analytical throughput and update-application latency per placement/scheduler pair."""
    wl = generate_workload(base)
    out = []
    for placement, sched in combos:
        r = run(SystemConfig("polynesia", placement, sched, sim=sim), wl)
        name = f"{placement}+{sched}"
        out.append(Point("placement", name, base.anl_queries, "anl_throughput", r.anl_throughput))
        out.append(Point("placement", name, base.anl_queries, "update_app_latency_ns", r.update_app_latency_ns))
    return out


def end_to_end(base: WorkloadSpec, sim: SimConfig, systems=SYSTEMS) -> list[Point]:
    """Per-system throughput normalized to the same workload's halves run in isolation.

    Transactional throughput is divided by a transaction-only run; analytical
    throughput by the system's own analytics-only run.
    """
    full = generate_workload(base)
    txn_only = generate_workload(replace(base, anl_queries=0))
    anl_only = generate_workload(replace(base, txn_queries=0))
    ideal_txn = run(SystemConfig("si-ss", sim=sim), txn_only).txn_throughput
    out = []
    for s in systems:
        r = run(SystemConfig(s, sim=sim), full)
        base_anl = run(SystemConfig(s, sim=sim), anl_only).anl_throughput
        out.append(Point("end_to_end", s, base.txn_queries, "norm_txn_throughput",
                         _ratio(r.txn_throughput, ideal_txn)))
        out.append(Point("end_to_end", s, base.txn_queries, "norm_anl_throughput",
                         _ratio(r.anl_throughput, base_anl)))
    return out


# Per-figure workloads sized so each sweep runs in seconds and its trend is
# visible; sweep axes override the matching field.
FIGURE_WORKLOADS = {
    "end_to_end": WorkloadSpec(),
    "snapshot": WorkloadSpec(txn_queries=1000, anl_threads=1, join_fraction=0.0),
    "mvcc": WorkloadSpec(update_ratio=1.0, anl_threads=1, anl_queries=16, join_fraction=0.0),
    "propagation": WorkloadSpec(txn_queries=500, anl_threads=1, anl_queries=2, join_fraction=0.0),
    "placement": WorkloadSpec(rows=16000, txn_queries=150, anl_threads=2, anl_queries=3, join_fraction=0.0),
}

SWEEPS = {"end_to_end": end_to_end, "snapshot": snapshot_sweep, "mvcc": mvcc_sweep,
          "propagation": propagation_sweep, "placement": placement_sweep}


def plot_data(sim: SimConfig, seed: int | None = None, base: WorkloadSpec | None = None) -> list[Point]:
    """Every figure series.

    Without ``base`` each figure uses its entry in :data:`FIGURE_WORKLOADS`;
    ``seed`` replaces the workload seed either way.
    """
    out: list[Point] = []
    for fig, sweep in SWEEPS.items():
        spec = base or FIGURE_WORKLOADS[fig]
        if seed is not None:
            spec = replace(spec, seed=seed)
        out.extend(sweep(spec, sim))
    return out
