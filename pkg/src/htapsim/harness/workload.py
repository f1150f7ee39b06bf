"""Deterministic synthetic workloads."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidSpec
from ..storage import RecordKey
from ..txn import READ, TxnOp, UpdateKind

# Candidate per-column distinct counts; the median draw stays at or below 32.
DISTINCT_CHOICES = (4, 8, 16, 24, 32, 48, 64, 128)
DISTINCT_WEIGHTS = (0.10, 0.15, 0.20, 0.15, 0.15, 0.10, 0.10, 0.05)
VALUE_STRIDE = 10


@dataclass(frozen=True)
class WorkloadSpec:
    txn_threads: int = 4
    txn_queries: int = 250  # per thread
    update_ratio: float = 0.5
    anl_threads: int = 2
    anl_queries: int = 4  # per thread
    tables: int = 2
    rows: int = 4000
    columns: int = 4
    ops_per_query: int = 4
    insert_fraction: float = 0.0  # share of writes that insert a new row
    new_value_prob: float = 0.05  # chance a written value lies outside the column's initial domain
    join_fraction: float = 0.25
    hot_rows: int = 0  # when > 0, writes go to the first hot_rows rows of a table
    seed: int = 7

    def validate(self) -> None:
        for name in ("txn_threads", "anl_threads", "tables", "rows", "columns", "ops_per_query"):
            if getattr(self, name) < 1:
                raise InvalidSpec(f"{name} must be >= 1")
        for name in ("txn_queries", "anl_queries", "hot_rows"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be >= 0")
        for name in ("update_ratio", "insert_fraction", "new_value_prob", "join_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1], got {v}")


@dataclass
class Workload:
    spec: WorkloadSpec
    tables: dict[int, np.ndarray]
    domains: dict[tuple[int, int], np.ndarray]
    txn_streams: list[list[list[TxnOp]]] = field(default_factory=list)
    anl_streams: list[list[str]] = field(default_factory=list)

    @property
    def n_txn(self) -> int:
        return sum(len(s) for s in self.txn_streams)

    @property
    def n_anl(self) -> int:
        return sum(len(s) for s in self.anl_streams)

    @property
    def n_writes(self) -> int:
        return sum(1 for s in self.txn_streams for q in s for op in q if op.kind is not READ)


def _plan_text(rng: np.random.Generator, spec: WorkloadSpec, domains) -> str:
    t = int(rng.integers(spec.tables))
    a, b = (int(x) for x in rng.integers(spec.columns, size=2))
    dom = domains[(t, a)]
    const = int(dom[int(rng.integers(dom.size))])
    op = ("lt", "le", "gt", "ge", "eq", "ne")[int(rng.integers(6))]
    if rng.random() < spec.join_fraction:
        t2 = int(rng.integers(spec.tables))
        c2 = int(rng.integers(spec.columns))
        return f"AGG count (JOIN (FILTER col=T{t}.C{a} {op} {const} (SCAN T{t}.C{b})) (SCAN T{t2}.C{c2}))"
    kind = int(rng.integers(3))
    fn = ("sum", "count", "min", "max")[int(rng.integers(4))]
    if kind == 0:
        return f"AGG {fn} (FILTER col=T{t}.C{a} {op} {const} (SCAN T{t}.C{b}))"
    if kind == 1:
        return f"AGG {fn} (SCAN T{t}.C{b})"
    c = int(rng.integers(spec.columns))
    return f"AGG {fn} (SELECT T{t}.C{c} (FILTER col=T{t}.C{a} {op} {const} (SCAN T{t}.C{a})))"


def generate_workload(spec: WorkloadSpec) -> Workload:
    """Initial tables plus per-thread transactional and analytical streams for ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    tables: dict[int, np.ndarray] = {}
    domains: dict[tuple[int, int], np.ndarray] = {}
    for t in range(spec.tables):
        cols = []
        for c in range(spec.columns):
            k = int(rng.choice(DISTINCT_CHOICES, p=DISTINCT_WEIGHTS))
            dom = np.sort(rng.choice(np.arange(k * VALUE_STRIDE), size=k, replace=False)).astype(np.int64)
            domains[(t, c)] = dom
            cols.append(dom[rng.integers(k, size=spec.rows)])
        tables[t] = np.stack(cols, axis=1)
    wl = Workload(spec, tables, domains)
    # Inserted rows get ids in generation order per table; execution order across
    # threads may differ, so inserts never target generated row ids directly.
    for _ in range(spec.txn_threads):
        stream = []
        for _ in range(spec.txn_queries):
            q = []
            for _ in range(spec.ops_per_query):
                t = int(rng.integers(spec.tables))
                hi = spec.hot_rows if 0 < spec.hot_rows <= spec.rows else spec.rows
                r = int(rng.integers(hi))
                c = int(rng.integers(spec.columns))
                if rng.random() < spec.update_ratio:
                    if rng.random() < spec.insert_fraction:
                        row = [int(domains[(t, cc)][int(rng.integers(domains[(t, cc)].size))])
                               for cc in range(spec.columns)]
                        q.append(TxnOp(RecordKey(t, -1, 0), UpdateKind.INSERT, row))
                    else:
                        dom = domains[(t, c)]
                        if rng.random() < spec.new_value_prob:
                            v = int(rng.integers(dom[-1] + 1, dom[-1] + 1 + 4 * VALUE_STRIDE))
                        else:
                            v = int(dom[int(rng.integers(dom.size))])
                        q.append(TxnOp(RecordKey(t, r, c), UpdateKind.MODIFY, v))
                else:
                    q.append(TxnOp(RecordKey(t, r, c), READ))
            stream.append(q)
        wl.txn_streams.append(stream)
    for _ in range(spec.anl_threads):
        wl.anl_streams.append([_plan_text(rng, spec, domains) for _ in range(spec.anl_queries)])
    return wl
