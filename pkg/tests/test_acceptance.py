"""Acceptance criteria, each at its stated size and tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""
import random
import time
from collections import deque
from dataclasses import replace

import numpy as np
import pytest

from htapsim.analytics import BASIC, OPTIMIZED, decompose, evaluate, parse_plan, place, schedule
from htapsim.analytics.scheduler import check_acyclic
from htapsim.analytics.tasks import assemble, run_task
from htapsim.application import ColumnReplica, apply_naive, apply_optimized
from htapsim.consistency import SnapshotManager
from htapsim.errors import HtapError
from htapsim.harness import SystemConfig, emit_csv, generate_workload, run
from htapsim.harness.report import (FIGURE_WORKLOADS, mvcc_sweep, placement_sweep, propagation_sweep,
                                    snapshot_sweep)
from htapsim.propagation import ColumnBuffer, ColumnLocation, HashIndex, merge_logs, ship_with_stats
from htapsim.storage import Database, NsmTable, RecordKey
from htapsim.txn import TxnIsland, TxnOp, UpdateKind, UpdateLogEntry
from htapsim.vaultsim import SimConfig, Topology

from gen import random_column, random_dag, random_plan
from oracles import merge_oracle

M, D, I = UpdateKind.MODIFY, UpdateKind.DELETE, UpdateKind.INSERT
LATENCIES = ("local_latency", "remote_hop_latency", "host_latency")


def perturbations():
    """Default costs, each latency constant alone at 0.5x and 2x, and all three together."""
    out = [("default", SimConfig())]
    for f in (0.5, 2.0):
        for name in LATENCIES:
            out.append((f"{name}x{f}", SimConfig().scaled_latencies(f, (name,))))
        out.append((f"all_latencies_x{f}", SimConfig().scaled_latencies(f)))
    return out


def test_c01_oracle_equivalence_application(record):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 10_001))
        col = random_column(rng, n, int(rng.integers(1, 300)), dead=float(rng.choice([0.0, 0.05])))
        m = int(rng.integers(0, 1025))
        ups, size = [], n
        hi = int(col.dict.values[-1]) + 50
        for c in range(1, m + 1):
            r = rng.random()
            if r < 0.05:
                ups.append((size, I, int(rng.integers(0, hi)), c))
                size += 1
            elif r < 0.1:
                ups.append((int(rng.integers(size)), D, 0, c))
            else:
                ups.append((int(rng.integers(size)), M, int(rng.integers(0, hi)), c))
        a = apply_optimized(col, ups)
        b = apply_naive(col, ups)
        bad += a.decoded_list() != b.decoded_list()
    elapsed = time.perf_counter() - t0
    ok = record("1 application oracle equivalence", bad == 0 and elapsed < 60,
                f"{1000 - bad}/1000 instances equal, {elapsed:.1f} s (limit 60 s)")
    assert ok


def test_c02_propagation_round_trip(record):
    rng = random.Random(202)
    # every row id is pre-indexed, so shipping never mutates these and they can be shared
    indexes = {p: {tb: HashIndex.build(tb, 4, 3000, partition_rows=p) for tb in range(2)} for p in (500, 1000, 3000)}
    bad = 0
    for _ in range(500):
        n_threads = rng.randint(1, 20)
        logs = [[] for _ in range(n_threads)]
        commit = 0
        for _ in range(rng.randint(0, 2500)):
            commit += 1
            kind = rng.choice([M, M, M, I, D])
            table, row = rng.randrange(2), rng.randrange(3000)
            cols = range(4) if kind is not M else [rng.randrange(4)]
            logs[rng.randrange(n_threads)].extend(
                UpdateLogEntry(commit, kind, rng.randrange(100), RecordKey(table, row, c)) for c in cols)
        cap = rng.choice([1024, 1024, 100, 7])
        fin = merge_logs(logs, cap)
        idx = indexes[rng.choice([500, 1000, 3000])]
        res = ship_with_stats(fin, idx)
        # entries of one commit are logged in column order, so (commit, column) restores the final order
        restored = sorted(((u[3], b.location.column_id), UpdateLogEntry(u[3], u[1], u[2], RecordKey(
            b.location.table_id, u[0], b.location.column_id))) for b in res.buffers for u in b.updates)
        same = [e for _, e in restored] == fin.entries
        bad += fin.entries != merge_oracle(logs, cap) or not same
    ok = record("2 propagation round trip", bad == 0, f"{500 - bad}/500 log sets exact")
    assert ok


def _projection(table: NsmTable, c: int) -> list:
    vals, live = table.column(c)
    return [int(v) if ok else None for v, ok in zip(vals.tolist(), live.tolist())]


def test_c03_freshness_equivalence(record):
    rng = random.Random(303)
    n_tables, n_rows, n_cols, n_threads = 2, 1000, 4, 4
    db = Database({t: NsmTable(t, np.array([[rng.randrange(40) for _ in range(n_cols)] for _ in range(n_rows)]))
                   for t in range(n_tables)})
    island = TxnIsland(db, n_threads)
    replica = ColumnReplica()
    indexes = {}
    for t in range(n_tables):
        replica.load_table(t, db.table(t).rows)
        indexes[t] = HashIndex.build(t, n_cols, n_rows, partition_rows=250)
    window: deque = deque(maxlen=64)  # (commit, database copy) for the commits just before a trigger
    rounds = mismatched = logged = 0
    while logged < 100_000:
        th = rng.randrange(n_threads)
        ops = []
        for _ in range(rng.randint(1, 3)):
            t = rng.randrange(n_tables)
            r = rng.randrange(len(db.table(t)))
            x = rng.random()
            if x < 0.03:
                ops.append(TxnOp(RecordKey(t, -1, 0), I, [rng.randrange(60) for _ in range(n_cols)]))
            elif x < 0.05:
                ops.append(TxnOp(RecordKey(t, r, 0), D))
            else:
                ops.append(TxnOp(RecordKey(t, r, rng.randrange(n_cols)), M, rng.randrange(60)))
        try:
            res = island.execute_txn_query(th, ops)
        except HtapError:
            continue
        logged += res.writes
        if island.pending_update_count() >= island.log_capacity - 64:
            window.append((island.last_commit, db.copy()))
        while island.should_propagate():
            final = merge_logs(island.pending_logs(), island.log_capacity)
            island.mark_shipped(final.watermark)
            for buf in ship_with_stats(final, indexes).buffers:
                replica.apply(buf)
            rounds += 1
            at_mark = next(snap for c, snap in reversed(window) if c == final.watermark)
            for t in range(n_tables):
                for c in range(n_cols):
                    mismatched += replica.decoded((t, c)) != _projection(at_mark.table(t), c)
    ok = record("3 freshness equivalence", mismatched == 0 and rounds > 0,
                f"{logged} updates, {rounds} rounds, {mismatched} column mismatches")
    assert ok


def test_c04_snapshot_isolation(record):
    rng = np.random.default_rng(404)
    prng = random.Random(404)
    topo = Topology(SimConfig())
    bad = 0
    long_chains = 0
    for _ in range(200):
        n = int(rng.integers(200, 3000))
        rows = np.stack([rng.integers(0, 30, n) for _ in range(3)], axis=1)
        replica = ColumnReplica.from_table(0, rows)
        sm = SnapshotManager(replica)
        commit = 0

        def mutate():
            nonlocal commit
            for c in range(3):
                ups = []
                for _ in range(int(rng.integers(0, 20))):
                    commit += 1
                    r = int(rng.integers(n))
                    ups.append((r, D, 0, commit) if rng.random() < 0.05 else (r, M, int(rng.integers(0, 45)), commit))
                if ups:
                    replica.apply(ColumnBuffer(ColumnLocation(0, c, 0), ups))
                    sm.mark_dirty((0, c))

        running = []
        for q in range(int(rng.integers(1, 5))):
            mutate()
            plan = parse_plan(random_plan(prng, 1, 3, 45))
            keys = sorted({k for k in replica.columns})
            versions = dict(zip(keys, sm.acquire_snapshot(q, keys)))
            frozen = {k: replica.current(k).decoded_list() for k in keys}
            placements = {k: place(i, n, prng.choice(["local", "distributed", "hybrid"]), topo,
                                   len(versions[k].dict)) for i, k in enumerate(keys)}
            g = decompose(plan, placements, versions)
            running.append((q, plan, g, versions, frozen, check_acyclic(g.tasks), {}))
        # run all queries' tasks interleaved with further updates
        while any(r[5] for r in running):
            q, plan, g, versions, frozen, order, outputs = prng.choice([r for r in running if r[5]])
            tid = order.pop(0)
            outputs[tid] = run_task(g.tasks[tid], g, versions, outputs)
            if prng.random() < 0.3:
                mutate()
            if not order:
                bad += assemble(g, outputs) != evaluate(plan, frozen)
                sm.release_snapshot(q)
        long_chains += sum(len(ch) != 1 for ch in sm.chains.values())
    ok = record("4 snapshot isolation", bad == 0 and long_chains == 0,
                f"200 interleavings, {bad} wrong answers, {long_chains} chains longer than 1 after release")
    assert ok


def test_c05_scheduler_exactly_once(record):
    rng = random.Random(505)
    bad = 0
    for _ in range(500):
        tasks = random_dag(rng)
        for mode in (BASIC, OPTIMIZED):
            s = schedule(tasks.values(), mode)
            ids = sorted(e.task_id for e in s.trace)
            tr = {e.task_id: e for e in s.trace}
            ok = ids == sorted(tasks) and all(tr[d].end <= tr[t.task_id].start
                                             for t in tasks.values() for d in t.deps)
            bad += not ok
    ok = record("5 scheduler exactly-once and dependency safety", bad == 0, f"{1000 - bad}/1000 schedules exact")
    assert ok


PLACEMENT_COMBOS = (("local", OPTIMIZED), ("distributed", OPTIMIZED), ("hybrid", OPTIMIZED))


@pytest.mark.parametrize("tag,sim", perturbations(), ids=[t for t, _ in perturbations()])
def test_c06_placement_trend(record, tag, sim):
    pts = {(p.series, p.metric): p.value
           for p in placement_sweep(FIGURE_WORKLOADS["placement"], sim, PLACEMENT_COMBOS)}
    thr = {s.split("+")[0]: v for (s, m), v in pts.items() if m == "anl_throughput"}
    lat = {s.split("+")[0]: v for (s, m), v in pts.items() if m == "update_app_latency_ns"}
    checks = {
        "distributed >= 2x local": thr["distributed"] >= 2 * thr["local"],
        "hybrid within 15% of distributed": abs(thr["hybrid"] - thr["distributed"]) <= 0.15 * thr["distributed"],
        "hybrid latency <= 1.2x local": lat["hybrid"] <= 1.2 * lat["local"],
        "distributed latency >= 1.3x local": lat["distributed"] >= 1.3 * lat["local"],
    }
    detail = (f"[{tag}] thr D/L={thr['distributed'] / thr['local']:.2f} H/D={thr['hybrid'] / thr['distributed']:.3f}"
              f" lat H/L={lat['hybrid'] / lat['local']:.2f} D/L={lat['distributed'] / lat['local']:.2f}")
    failed = [k for k, v in checks.items() if not v]
    ok = record("6 placement trend", not failed, detail + (f" failed: {failed}" if failed else ""))
    assert ok


def _series(pts, metric, series=None):
    return [p.value for p in pts if p.metric == metric and (series is None or p.series == series)]


@pytest.mark.parametrize("tag,sim", perturbations(), ids=[t for t, _ in perturbations()])
def test_c07_snapshot_cost_trend(record, tag, sim):
    norm = _series(snapshot_sweep(FIGURE_WORKLOADS["snapshot"], sim, (8, 16, 32)), "norm_txn_throughput")
    ok = record("7 snapshot cost trend", norm[0] > norm[1] > norm[2],
                f"[{tag}] normalized txn throughput at 8/16/32 queries: " + ", ".join(f"{v:.3f}" for v in norm))
    assert ok


@pytest.mark.parametrize("tag,sim", perturbations(), ids=[t for t, _ in perturbations()])
def test_c08_mvcc_chain_trend(record, tag, sim):
    pts = mvcc_sweep(FIGURE_WORKLOADS["mvcc"], sim, (40, 160, 640))
    norm = _series(pts, "norm_anl_throughput")
    chain = _series(pts, "mean_chain_length")
    ok = record("8 MVCC chain trend", norm[0] >= norm[1] >= norm[2] and chain[0] < chain[1] < chain[2],
                f"[{tag}] normalized anl throughput {', '.join(f'{v:.3f}' for v in norm)}; "
                f"mean chain {', '.join(f'{v:.4f}' for v in chain)}")
    assert ok


@pytest.mark.parametrize("tag,sim", perturbations(), ids=[t for t, _ in perturbations()])
def test_c09_propagation_overhead_trend(record, tag, sim):
    pts = propagation_sweep(FIGURE_WORKLOADS["propagation"], sim, (0.5, 0.8, 1.0))
    misw = _series(pts, "norm_txn_throughput", "mi-sw")
    poly = _series(pts, "norm_txn_throughput", "polynesia")
    ok = record("9 propagation overhead trend",
                misw[0] >= misw[1] >= misw[2] and all(1 - p < 1 - m for p, m in zip(poly, misw)),
                f"[{tag}] loss mi-sw {', '.join(f'{1 - v:.3f}' for v in misw)}; "
                f"polynesia {', '.join(f'{1 - v:.3f}' for v in poly)}")
    assert ok


def test_c10_determinism(record, tmp_path):
    spec = replace(FIGURE_WORKLOADS["end_to_end"], txn_queries=100)
    paths = []
    for k in range(2):
        p = tmp_path / f"run{k}.csv"
        wl = generate_workload(spec)
        for system in ("polynesia", "si-ss", "si-mvcc", "mi-sw"):
            emit_csv(run(SystemConfig(system), wl), p)
        paths.append(p)
    same = paths[0].read_bytes() == paths[1].read_bytes()
    ok = record("10 determinism", same, "byte-identical CSV across reruns" if same else "CSV differs")
    assert ok


def test_c10_suite_runtime(record):
    # runs last in this file; the clock starts when the module is imported
    elapsed = time.perf_counter() - _SUITE_START
    ok = record("10 acceptance suite runtime", elapsed < 600, f"{elapsed:.0f} s so far (limit 600 s)")
    assert ok


_SUITE_START = time.perf_counter()
