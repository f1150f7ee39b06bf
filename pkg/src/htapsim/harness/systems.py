"""The four HTAP system compositions driven on one virtual clock.

All systems share the transactional engine and the workload. They differ in
how analytical queries obtain a consistent view and in who pays for keeping
the analytical data fresh:

* ``polynesia``: a separate column replica on the vaults, refreshed by the
  log merge / lookup / ship accelerators, lazy column snapshots through the
  copy unit, and vault-side analytics.
* ``si-ss``: one row replica; every analytical query over changed data takes a
  full copy through the off-chip channel while writers wait.
* ``si-mvcc``: one row replica with per-tuple version chains that analytical
  scans walk back to their start timestamp.
* ``mi-sw``: a separate column replica refreshed in software by the
  transactional thread that fills the log, with host-side analytics.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from ..analytics.operators import run_plan
from ..analytics.placement import PlacementPlan, Strategy, place
from ..analytics.plan import Agg, Join, Plan, columns, parse_plan, pipeline
from ..analytics.reference import evaluate
from ..analytics.scheduler import BASIC, OPTIMIZED, PimScheduler, check_acyclic
from ..analytics.tasks import assemble, decompose, run_task
from ..application import ColumnReplica
from ..consistency import FullCopySnapshotter, SnapshotManager, TupleVersionChain
from ..errors import InvalidSpec, NoVisibleVersion
from ..propagation import HashIndex, merge_logs, probe_timeline, ship_with_stats
from ..storage import Database, NsmTable, packed_bytes
from ..txn import READ, TxnIsland, UpdateKind
from ..vaultsim import HOST, Machine, SimConfig, Signal
from .workload import Workload

SYSTEMS = ("polynesia", "si-ss", "si-mvcc", "mi-sw")
IDEAL_FLAGS = ("snapshot", "mvcc", "propagation")
LOG_ENTRY_BYTES = 32
SHIP_ENTRY_BYTES = 16
ROW_ACCESS_BYTES = 64
STEP_ROWS = 1000

_RID_SCHED, _RID_PROP, _RID_TXN, _RID_ANL = 1, 50, 100, 1000


@dataclass(frozen=True)
class SystemConfig:
    system: str = "polynesia"
    placement: str = "hybrid"
    scheduler: str = OPTIMIZED
    sim: SimConfig = field(default_factory=SimConfig)
    ideal: frozenset = frozenset()

    def validate(self) -> None:
        if self.system not in SYSTEMS:
            raise InvalidSpec(f"unknown system {self.system!r}; expected one of {', '.join(SYSTEMS)}")
        try:
            Strategy(self.placement)
        except ValueError:
            raise InvalidSpec(f"unknown placement {self.placement!r}") from None
        if self.scheduler not in (BASIC, OPTIMIZED):
            raise InvalidSpec(f"unknown scheduler {self.scheduler!r}")
        bad = set(self.ideal) - set(IDEAL_FLAGS)
        if bad:
            raise InvalidSpec(f"unknown ideal flag(s): {', '.join(sorted(bad))}")


@dataclass
class MetricsReport:
    system: str
    placement: str
    scheduler: str
    seed: int
    txn_queries: int = 0
    anl_queries: int = 0
    txn_makespan_ns: float = 0.0
    anl_makespan_ns: float = 0.0
    makespan_ns: float = 0.0
    txn_throughput: float = 0.0  # queries per simulated second
    anl_throughput: float = 0.0
    update_app_latency_ns: float = 0.0
    propagation_rounds: int = 0
    updates_shipped: int = 0
    onchip_bytes: int = 0
    offchip_bytes: int = 0
    snapshot_count: int = 0
    snapshot_bytes: int = 0
    mean_chain_length: float = 0.0
    final_answers_ok: bool = True
    answers: list = field(default_factory=list, repr=False)
    final_answers: list = field(default_factory=list, repr=False)


CSV_FIELDS = ("system", "placement", "scheduler", "seed", "txn_queries", "anl_queries", "txn_makespan_ns",
              "anl_makespan_ns", "makespan_ns", "txn_throughput", "anl_throughput", "update_app_latency_ns",
              "propagation_rounds", "updates_shipped", "onchip_bytes", "offchip_bytes", "snapshot_count",
              "snapshot_bytes", "mean_chain_length", "final_answers_ok")


def _log2c(x: int) -> int:
    return math.ceil(math.log2(x)) if x > 1 else 0


class _MvccStore:
    """Per-tuple version chains for rows that have been written (GC disabled)."""

    def __init__(self):
        self.chains: dict[int, dict[int, TupleVersionChain]] = {}
        self.rows: dict[int, list[int]] = {}  # sorted row ids with chains, per table

    def ensure(self, table: int, row: int, value: tuple | None, ts: int = 0) -> None:
        chains = self.chains.setdefault(table, {})
        if row not in chains:
            ch = TupleVersionChain()
            ch.install(ts, value)
            chains[row] = ch
            bisect.insort(self.rows.setdefault(table, []), row)

    def install(self, table: int, row: int, ts: int, value: tuple | None) -> None:
        ch = self.chains[table][row]
        ch.install(ts, value)

    def newer_than(self, table: int, lo: int, hi: int, ts: int) -> int:
        """Extra chain nodes a reader at ``ts`` walks for rows in ``[lo, hi)``."""
        rows = self.rows.get(table)
        if not rows:
            return 0
        chains = self.chains[table]
        extra = 0
        for r in rows[bisect.bisect_left(rows, lo):bisect.bisect_left(rows, hi)]:
            for vts, _ in chains[r].versions:
                if vts <= ts:
                    break
                extra += 1
        return extra

    def table_at(self, table: NsmTable, ts: int) -> tuple[np.ndarray, np.ndarray]:
        rows = table.rows.copy()
        live = table.live.copy()
        for r, ch in self.chains.get(table.table_id, {}).items():
            try:
                value, _ = ch.read(ts)
            except NoVisibleVersion:
                value = None
            if value is None:
                live[r] = False
            else:
                rows[r] = value
                live[r] = True
        return rows, live


def _columns_from_tables(tables: dict[int, tuple[np.ndarray, np.ndarray]], keys: Iterable[tuple[int, int]]):
    out = {}
    for t in sorted({k[0] for k in keys}):
        rows, live = tables[t]
        out.update(ColumnReplica.from_table(t, rows, live).columns)
    return out


def _oracle_columns(db: Database) -> dict[tuple[int, int], list[int | None]]:
    cols = {}
    for tid, table in db.tables.items():
        for c in range(table.n_columns):
            vals, live = table.column(c)
            cols[(tid, c)] = [int(v) if ok else None for v, ok in zip(vals.tolist(), live.tolist())]
    return cols


class Simulation:
    """One run of one system over one workload."""

    def __init__(self, cfg: SystemConfig, wl: Workload):
        cfg.validate()
        self.cfg = cfg
        self.sim = cfg.sim
        self.wl = wl
        self.m = Machine(cfg.sim)
        self.loop = self.m.loop
        self.db = Database({t: NsmTable(t, rows) for t, rows in wl.tables.items()})
        sysname = cfg.system
        logging = sysname in ("polynesia", "mi-sw")
        self.island = TxnIsland(self.db, wl.spec.txn_threads, logging=logging)
        self.report = MetricsReport(sysname, cfg.placement, cfg.scheduler, wl.spec.seed)
        self.plans = [[parse_plan(p) for p in s] for s in wl.anl_streams]
        self.app_latencies: list[float] = []
        self.txn_end = 0.0
        self.anl_end = 0.0
        self.txn_done_threads = 0
        self.chain_nodes = 0
        self.chain_reads = 0
        self._qid = 0
        self._task_id = 0
        self._events = 0
        if sysname in ("polynesia", "mi-sw"):
            self.replica = ColumnReplica()
            for t, rows in wl.tables.items():
                self.replica.load_table(t, rows)
            self.snap = SnapshotManager(self.replica)
            self.indexes = {t: HashIndex.build(t, rows.shape[1], rows.shape[0]) for t, rows in wl.tables.items()}
            self.prop_busy = False
            self.prop_signal = Signal()
        if sysname == "polynesia":
            keys = sorted(self.replica.columns)
            self.placements: dict[tuple[int, int], PlacementPlan] = {
                k: place(i, len(self.replica.columns[k]), cfg.placement, self.m.topo,
                         len(self.replica.columns[k].dict)) for i, k in enumerate(keys)}
            self.sched = PimScheduler(self.m, cfg.scheduler, rid=_RID_SCHED)
        if sysname == "si-ss":
            self.gate = self.m.resource("txn-gate")
            # Read and write both cross the channel, so a copy streams at half its bandwidth.
            self.ss = FullCopySnapshotter(cfg.sim.offchip_bw / 2)
            self.ss_columns: dict | None = None
        if sysname == "si-mvcc":
            self.mvcc = _MvccStore()

    # helpers -------------------------------------------------------------

    def ideal(self, flag: str) -> bool:
        return flag in self.cfg.ideal

    def row_vault(self, table: int, row: int) -> int:
        ncols = self.db.tables[table].n_columns
        addr = (table * (1 << 24) + row) * 8 * ncols
        return (addr // 256) % self.sim.n_vaults

    def _tick(self) -> None:
        self._events += 1
        if self._events % 256 == 0:
            self.m.prune()

    # transactional threads -----------------------------------------------

    def txn_actor(self, thread: int):
        sim = self.sim
        stream = self.wl.txn_streams[thread]
        log_vault = thread % sim.n_vaults
        for ops in stream:
            t = self.loop.now
            if self.cfg.system == "si-ss":
                t = self.gate.free_at(t)
                if t > self.loop.now:
                    yield t
            before = {tid: len(tb) for tid, tb in self.db.tables.items()}
            writes = [op for op in ops if op.kind is not READ]
            if self.cfg.system == "si-mvcc":
                for op in writes:
                    if op.kind is not UpdateKind.INSERT:
                        tb = self.db.tables[op.key.table_id]
                        self.mvcc.ensure(op.key.table_id, op.key.row_id, tuple(tb.rows[op.key.row_id].tolist()))
            res = self.island.execute_txn_query(thread, ops)
            done = t
            for op in ops:
                row = op.key.row_id if op.key.row_id >= 0 else before[op.key.table_id]
                done = max(done, self.m.charge_access(self.row_vault(op.key.table_id, row), ROW_ACCESS_BYTES,
                                                      HOST, t))
            if res.commit is not None:
                if self.island.logging:
                    done = max(done, self.m.charge_access(log_vault, LOG_ENTRY_BYTES * res.writes, HOST, t))
                if self.cfg.system == "si-mvcc":
                    done = max(done, self._mvcc_install(res.commit, writes, before, t))
                if self.cfg.system == "si-ss":
                    self.ss.mark_dirty()
            end = done + len(ops) * sim.txn_op_ns
            self._tick()
            yield end
            if self.cfg.system == "polynesia" and self.island.should_propagate() and not self.prop_busy:
                sig, self.prop_signal = self.prop_signal, Signal()
                sig.fire(self.loop, self.loop.now)
            if self.cfg.system == "mi-sw" and self.island.should_propagate():
                yield from self._mi_sw_propagate()
        self.txn_end = max(self.txn_end, self.loop.now)
        self.txn_done_threads += 1

    def _mvcc_install(self, commit: int, writes, before, t: float) -> float:
        done = t
        touched = []
        for op in writes:
            tid = op.key.table_id
            if op.kind is UpdateKind.INSERT:
                continue
            touched.append((tid, op.key.row_id))
        for tid, tb in self.db.tables.items():
            for r in range(before[tid], len(tb)):
                self.mvcc.ensure(tid, r, None, 0)
                touched.append((tid, r))
        for tid, r in dict.fromkeys(touched):
            tb = self.db.tables[tid]
            value = tuple(tb.rows[r].tolist()) if tb.live[r] else None
            self.mvcc.install(tid, r, commit, value)
            if not self.ideal("mvcc"):
                done = max(done, self.m.charge_access(self.row_vault(tid, r), ROW_ACCESS_BYTES, HOST, t))
        return done

    # propagation ------------------------------------------------------------

    def _round(self):
        final = merge_logs(self.island.pending_logs())
        consumed = [sum(1 for e in log if e.commit <= final.watermark) for log in self.island.pending_logs()]
        self.island.mark_shipped(final.watermark)
        shipped = ship_with_stats(final, self.indexes)
        self.report.propagation_rounds += 1
        self.report.updates_shipped += len(final)
        return final, consumed, shipped

    def _apply_functional(self, buffers) -> list[tuple[Any, int, int, int, int]]:
        """Apply buffers; return (key, rows, m, d_old, d_upd, width) per buffer for costing."""
        out = []
        for buf in buffers:
            key = (buf.location.table_id, buf.location.column_id)
            old = self.replica.current(key)
            d_upd = len({u[2] for u in buf.updates if u[1] is not UpdateKind.DELETE})
            new = self.replica.apply(buf)
            self.snap.mark_dirty(key)
            out.append((key, len(new), len(buf), len(old.dict), d_upd, new.dict.width_bits))
        return out

    def prop_actor(self):
        sim = self.sim
        merge_vault = 0
        while True:
            yield self.prop_signal
            self.prop_busy = True
            while self.island.should_propagate():
                t0 = self.loop.now
                final, consumed, shipped = self._round()
                costs_in = self._apply_functional(shipped.buffers)
                if self.ideal("propagation"):
                    continue
                t = t0
                for thread, k in enumerate(consumed):
                    if k:
                        t = max(t, self.m.charge_copy(thread % sim.n_vaults, merge_vault, LOG_ENTRY_BYTES * k, t0))
                t += len(final) * sim.merge_ns_per_entry * max(final.passes, 1)
                node_ns = sim.local_latency + ROW_ACCESS_BYTES / sim.per_vault_bw
                retire = probe_timeline(shipped.nodes, node_ns, sim.hash_ns, sim.probe_units)
                for nodes, r in zip(shipped.nodes, retire):
                    self.m.charge_access(merge_vault, ROW_ACCESS_BYTES * nodes, merge_vault, t + r - nodes * node_ns)
                t += retire[-1] if retire else 0.0
                t_ship = t
                for buf in shipped.buffers:
                    key = (buf.location.table_id, buf.location.column_id)
                    dst = self.placements[key].dict_owner
                    t_ship = max(t_ship, self.m.charge_copy(merge_vault, dst, SHIP_ENTRY_BYTES * len(buf), t))
                end = t_ship
                for key, n, m, d_old, d_upd, w in costs_in:
                    lat = self._pim_apply(key, n, m, d_old, d_upd, w, t_ship) - t_ship
                    self.app_latencies.append(lat)
                    end = max(end, t_ship + lat)
                self._tick()
                yield end
            self.prop_busy = False

    def _pim_apply(self, key, n: int, m: int, d_old: int, d_upd: int, w: int, t: float) -> float:
        """Completion time of one column's update application under the column's placement."""
        sim = self.sim
        pl = self.placements[key]
        owner = pl.dict_owner
        t = t + (m * _log2c(m) + d_old + d_upd) * sim.merge_ns_per_entry
        parts = list(pl.partitions)
        if parts[-1].end < n:
            last = parts[-1]
            parts[-1] = type(last)(last.start, n, last.vault)

        def recode(vault: int, rows: int, start: float) -> float:
            b = packed_bytes(rows, w)
            return self.m.charge_copy(vault, vault, b, start) + rows * sim.recode_ns_per_tuple

        if pl.strategy is Strategy.LOCAL:
            return recode(owner, n, t)
        if pl.strategy is Strategy.HYBRID:
            map_bytes = 4 * (d_old + d_upd)
            ends = []
            tb = t
            for p in parts:
                if p.vault != owner:
                    tb = self.m.charge_copy(owner, p.vault, map_bytes, tb)
                    ends.append(recode(p.vault, p.end - p.start, tb))
                else:
                    ends.append(recode(p.vault, p.end - p.start, t))
            return max(ends)
        # Distributed: the dictionary owner gathers every partition, recodes, and scatters back.
        for p in parts:
            if p.vault != owner:
                t = self.m.charge_copy(p.vault, owner, packed_bytes(p.end - p.start, w), t)
        t = recode(owner, n, t)
        for p in parts:
            if p.vault != owner:
                t = self.m.charge_copy(owner, p.vault, packed_bytes(p.end - p.start, w), t)
        return t

    def _mi_sw_propagate(self):
        sim = self.sim
        while self.island.should_propagate():
            t = self.loop.now
            k = sum(1 for log in self.island.pending_logs() if log)
            final, consumed, shipped = self._round()
            costs_in = self._apply_functional(shipped.buffers)
            if self.ideal("propagation"):
                continue
            t = self.m.charge_host_bytes(LOG_ENTRY_BYTES * len(final), t)
            t += len(final) * max(_log2c(k), 1) * sim.host_ns_per_tuple
            nodes = sum(shipped.nodes)
            self.m.charge_host_bytes(ROW_ACCESS_BYTES * nodes, t, latency=False)
            t += nodes * sim.host_latency / sim.host_mlp
            t = self.m.charge_host_copy(SHIP_ENTRY_BYTES * len(final), t)
            for key, n, m, d_old, d_upd, w in costs_in:
                t0 = t
                t += (m * _log2c(m) + d_old + d_upd + n) * sim.host_ns_per_tuple
                t = self.m.charge_host_copy(packed_bytes(n, w), t)
                self.app_latencies.append(t - t0)
            self._tick()
            yield t

    # analytical streams ---------------------------------------------------------

    def anl_actor(self, stream: int):
        for plan in self.plans[stream]:
            qid = self._qid
            self._qid += 1
            if self.cfg.system == "polynesia":
                ans = yield from self._q_polynesia(qid, plan)
            elif self.cfg.system == "mi-sw":
                ans = yield from self._q_mi_sw(qid, plan)
            elif self.cfg.system == "si-ss":
                ans = yield from self._q_si_ss(plan)
            else:
                ans = yield from self._q_si_mvcc(plan)
            self.report.answers.append((qid, ans))
            self.anl_end = max(self.anl_end, self.loop.now)
            self._tick()

    def _q_polynesia(self, qid: int, plan: Plan):
        keys = [c.key for c in columns(plan)]
        versions = dict(zip(keys, self.snap.acquire_snapshot(qid, keys)))
        t = self.loop.now
        if not self.ideal("snapshot"):
            # Each freshly copied column is duplicated partition by partition inside its own vaults.
            for key in self.snap.last_copied:
                col = versions[key].column
                for p in self.placements[key].partitions:
                    nb = packed_bytes(p.end - p.start, col.dict.width_bits) + col.dict.nbytes
                    t = max(t, self.m.charge_copy(p.vault, p.vault, nb, self.loop.now))
        g = decompose(plan, self.placements, versions, query_id=qid, first_id=self._task_id)
        self._task_id += len(g) + 1
        outputs: dict[int, Any] = {}

        def on_task(task, _now):
            outputs[task.task_id] = run_task(task, g, versions, outputs)

        done = self.sched.submit(g, at=t, on_task=on_task)
        yield done
        self.snap.release_snapshot(qid)
        return assemble(g, outputs)

    def _host_scan(self, plan: Plan, t: float, row_bytes_of=None, on_step=None) -> float:
        """Host-side scan cost of a plan in 1000-row steps."""
        sim = self.sim
        body = plan.child if isinstance(plan, Agg) else plan
        sides = [body.left, body.right] if isinstance(body, Join) else [body]
        for side in sides:
            nodes = pipeline(side)
            table = nodes[0].col.table
            n = len(self.db.tables[table])
            for s in range(0, n, STEP_ROWS):
                e = min(n, s + STEP_ROWS)
                if row_bytes_of is not None:
                    nbytes = (e - s) * row_bytes_of(table)
                else:
                    nbytes = sum(packed_bytes(e - s, self.replica.current(nd.col.key).dict.width_bits)
                                 for nd in nodes)
                t = self.m.charge_host_bytes(nbytes, t) + (e - s) * len(nodes) * sim.host_ns_per_tuple
                if on_step is not None:
                    t = on_step(table, s, e, t)
        return t

    def _q_mi_sw(self, qid: int, plan: Plan):
        keys = [c.key for c in columns(plan)]
        before = self.snap.copied_bytes
        versions = dict(zip(keys, self.snap.acquire_snapshot(qid, keys)))
        t = self.loop.now
        copied = self.snap.copied_bytes - before
        if copied and not self.ideal("snapshot"):
            t = self.m.charge_host_copy(copied, t)
        t = self._host_scan(plan, t)
        ans = run_plan(plan, versions)
        yield t
        self.snap.release_snapshot(qid)
        return ans

    def _q_si_ss(self, plan: Plan):
        t = self.loop.now
        copies = self.ss.copies
        snap, _ = self.ss.take(self.db)
        if self.ss.copies > copies:
            self.ss_columns = None
            if not self.ideal("snapshot"):
                done = self.m.charge_host_copy(snap.nbytes, t)
                self.gate.reserve(t, done - t)  # writers stall until the copy completes
                t = done
        if self.ss_columns is None:
            tables = {tid: (tb.rows, tb.live) for tid, tb in snap.tables.items()}
            self.ss_columns = _columns_from_tables(tables, [(tid, 0) for tid in tables])
        t = self._host_scan(plan, t, row_bytes_of=lambda tid: snap.tables[tid].row_bytes)
        ans = run_plan(plan, self.ss_columns)
        yield t
        return ans

    def _q_si_mvcc(self, plan: Plan):
        ts = self.island.last_commit
        sim = self.sim

        def on_step(table: int, s: int, e: int, t: float) -> float:
            extra = self.mvcc.newer_than(table, s, e, ts)
            self.chain_nodes += (e - s) + extra
            self.chain_reads += e - s
            if extra and not self.ideal("mvcc"):
                self.m.charge_host_bytes(ROW_ACCESS_BYTES * extra, t, latency=False)
                t += extra * sim.host_latency
            return t

        # Steps advance the clock so versions committed meanwhile lengthen later walks.
        body = plan.child if isinstance(plan, Agg) else plan
        sides = [body.left, body.right] if isinstance(body, Join) else [body]
        t = self.loop.now
        for side in sides:
            nodes = pipeline(side)
            table = nodes[0].col.table
            tb = self.db.tables[table]
            n = len(tb)
            for s in range(0, n, STEP_ROWS):
                e = min(n, s + STEP_ROWS)
                t = self.m.charge_host_bytes((e - s) * tb.row_bytes, t) + (e - s) * len(nodes) * sim.host_ns_per_tuple
                t = on_step(table, s, e, t)
                yield t
        tids = sorted({c.table for c in columns(plan)})
        tables = {tid: self.mvcc.table_at(self.db.tables[tid], ts) for tid in tids}
        return run_plan(plan, _columns_from_tables(tables, [(tid, 0) for tid in tids]))

    # driver -----------------------------------------------------------------

    def run(self) -> MetricsReport:
        wl = self.wl
        for th in range(wl.spec.txn_threads):
            self.loop.spawn(self.txn_actor(th), 0.0, _RID_TXN + th)
        for s in range(len(self.plans)):
            self.loop.spawn(self.anl_actor(s), 0.0, _RID_ANL + s)
        if self.cfg.system == "polynesia":
            self.loop.spawn(self.prop_actor(), 0.0, _RID_PROP)
        self.loop.run()
        self._finish()
        return self.report

    def _drain(self) -> None:
        while self.island.pending_update_count():
            _, _, shipped = self._round()
            self._apply_functional(shipped.buffers)

    def final_pass(self) -> list:
        """Answers to every distinct workload plan once all updates are visible everywhere."""
        plans = list(dict.fromkeys(p for s in self.wl.anl_streams for p in s))
        out = []
        sysname = self.cfg.system
        if sysname in ("polynesia", "mi-sw"):
            self._drain()
        for text in plans:
            plan = parse_plan(text)
            keys = [c.key for c in columns(plan)]
            if sysname == "polynesia":
                qid = ("final", text)
                versions = dict(zip(keys, self.snap.acquire_snapshot(qid, keys)))
                g = decompose(plan, self.placements, versions)
                outputs: dict[int, Any] = {}
                for tid in check_acyclic(g.tasks):
                    outputs[tid] = run_task(g.tasks[tid], g, versions, outputs)
                self.snap.release_snapshot(qid)
                out.append(assemble(g, outputs))
            elif sysname == "mi-sw":
                out.append(run_plan(plan, self.replica.columns))
            elif sysname == "si-ss":
                tables = {tid: (tb.rows, tb.live) for tid, tb in self.db.tables.items()}
                out.append(run_plan(plan, _columns_from_tables(tables, keys)))
            else:
                ts = self.island.last_commit
                tids = sorted({k[0] for k in keys})
                tables = {tid: self.mvcc.table_at(self.db.tables[tid], ts) for tid in tids}
                out.append(run_plan(plan, _columns_from_tables(tables, keys)))
        oracle_cols = _oracle_columns(self.db)
        expected = [evaluate(parse_plan(t), oracle_cols) for t in plans]
        self.report.final_answers_ok = out == expected
        return out

    def _finish(self) -> None:
        r = self.report
        wl = self.wl
        r.txn_queries = wl.n_txn
        r.anl_queries = len(r.answers)
        r.txn_makespan_ns = self.txn_end
        r.anl_makespan_ns = self.anl_end
        r.makespan_ns = self.loop.now
        r.txn_throughput = r.txn_queries / (self.txn_end * 1e-9) if self.txn_end > 0 else 0.0
        r.anl_throughput = r.anl_queries / (self.anl_end * 1e-9) if self.anl_end > 0 else 0.0
        r.update_app_latency_ns = float(np.mean(self.app_latencies)) if self.app_latencies else 0.0
        r.onchip_bytes = self.m.onchip_bytes
        r.offchip_bytes = self.m.offchip_bytes
        if self.cfg.system in ("polynesia", "mi-sw"):
            r.snapshot_count = self.snap.copies
            r.snapshot_bytes = self.snap.copied_bytes
        elif self.cfg.system == "si-ss":
            r.snapshot_count = self.ss.copies
            r.snapshot_bytes = self.ss.copied_bytes
        if self.cfg.system == "si-mvcc":
            r.mean_chain_length = self.chain_nodes / self.chain_reads if self.chain_reads else 0.0
        r.final_answers = self.final_pass()


def run(cfg: SystemConfig, wl: Workload) -> MetricsReport:
    return Simulation(cfg, wl).run()
