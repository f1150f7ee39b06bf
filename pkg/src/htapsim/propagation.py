"""Update gathering and shipping.

Stage 1 merges the per-thread logs into a commit-ordered final log, stage 2
resolves each entry's analytical column through a chained hash index, and
stage 3 groups entries into per-column buffers ready to be written to the
analytical replica.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import KeyNotIndexed, UnsortedInputLog
from .storage import RecordKey
from .txn import DEFAULT_LOG_CAPACITY, UpdateKind, UpdateLogEntry

MERGE_FAN_IN = 8
FIFO_DEPTH = 128
HASH_MIX = 2654435761
PROBE_UNITS = 4


@dataclass
class FinalLog:
    entries: list[UpdateLogEntry] = field(default_factory=list)
    capacity: int = DEFAULT_LOG_CAPACITY
    passes: int = 0
    comparisons: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def watermark(self) -> int:
        return self.entries[-1].commit if self.entries else 0


class _LoserTree:
    """Tournament tree over up to ``MERGE_FAN_IN`` sorted runs.

    Internal nodes keep the loser of each match; the overall winner sits at
    index 0. Exhausted runs carry an infinite key.
    """

    def __init__(self, runs: Sequence[Sequence[UpdateLogEntry]]):
        self.runs = runs
        self.k = max(1, len(runs))
        self.pos = [0] * self.k
        self.comparisons = 0
        size = 1
        while size < self.k:
            size *= 2
        self.size = size
        self.tree = [-1] * size
        winners = [self._build(1)]
        self.tree[0] = winners[0]

    def _key(self, r: int):
        if r < 0 or r >= len(self.runs) or self.pos[r] >= len(self.runs[r]):
            return (math.inf, r)
        return (self.runs[r][self.pos[r]].commit, r)

    def _build(self, node: int) -> int:
        if node >= self.size:
            return node - self.size
        a, b = self._build(2 * node), self._build(2 * node + 1)
        self.comparisons += 1
        if self._key(a) <= self._key(b):
            self.tree[node] = b
            return a
        self.tree[node] = a
        return b

    def pop(self) -> UpdateLogEntry | None:
        w = self.tree[0]
        if self._key(w)[0] == math.inf:
            return None
        item = self.runs[w][self.pos[w]]
        self.pos[w] += 1
        node = (w + self.size) // 2
        while node >= 1:
            self.comparisons += 1
            if self._key(self.tree[node]) < self._key(w):
                self.tree[node], w = w, self.tree[node]
            node //= 2
        self.tree[0] = w
        return item


def _check_sorted(log: Sequence[UpdateLogEntry], i: int) -> None:
    for a, b in zip(log, log[1:]):
        if b.commit < a.commit:
            raise UnsortedInputLog(f"log {i} has commit {b.commit} after {a.commit}")


def _merge_pass(runs: Sequence[Sequence[UpdateLogEntry]], limit: int | None) -> tuple[list, int]:
    tree = _LoserTree(runs)
    out: list[UpdateLogEntry] = []
    while limit is None or len(out) < limit:
        e = tree.pop()
        if e is None:
            break
        out.append(e)
    return out, tree.comparisons


def merge_logs(logs: Sequence[Sequence[UpdateLogEntry]], capacity: int = DEFAULT_LOG_CAPACITY) -> FinalLog:
    """Merge sorted thread logs into one commit-ordered log of at most ``capacity`` entries.

    More than eight inputs are merged in successive eight-way passes. Entries
    sharing a commit id (a multi-column insert) are never split across two
    final logs unless the group alone exceeds the capacity.
    """
    runs = [list(getattr(log, "pending", log)) for log in logs]
    for i, run in enumerate(runs):
        _check_sorted(run, i)
    runs = [r for r in runs if r]
    final = FinalLog(capacity=capacity)
    if not runs:
        return final
    # Take one extra entry so a trailing split commit group can be detected.
    limit = capacity + 1
    while len(runs) > MERGE_FAN_IN:
        merged = []
        for g in range(0, len(runs), MERGE_FAN_IN):
            out, cmp_ = _merge_pass(runs[g:g + MERGE_FAN_IN], limit)
            merged.append(out)
            final.comparisons += cmp_
        final.passes += 1
        runs = merged
    out, cmp_ = _merge_pass(runs, limit)
    final.comparisons += cmp_
    final.passes += 1
    if len(out) > capacity:
        nxt = out[capacity]
        out = out[:capacity]
        if out and out[-1].commit == nxt.commit:
            cut = len(out)
            while cut > 0 and out[cut - 1].commit == nxt.commit:
                cut -= 1
            if cut > 0:
                out = out[:cut]
    final.entries = out
    return final


def hash_key(column_id: int, row_id: int, n_buckets: int) -> int:
    if n_buckets < 1:
        raise ValueError("n_buckets must be >= 1")
    return (column_id * HASH_MIX + row_id) % n_buckets


def bucket_count(partition_rows: int) -> int:
    target = max(1, math.ceil(partition_rows / 4))
    return 1 << (target - 1).bit_length()


class ColumnLocation(NamedTuple):
    table_id: int
    column_id: int
    partition_id: int


class HashIndex:
    """Separate-chaining index from a ``(column, row)`` key to its column location."""

    def __init__(self, table_id: int, n_buckets: int, partition_rows: int | None = None):
        if n_buckets < 1:
            raise ValueError("n_buckets must be >= 1")
        self.table_id = table_id
        self.n_buckets = n_buckets
        self.partition_rows = partition_rows
        self.buckets: list[list[tuple[int, int, ColumnLocation]]] = [[] for _ in range(n_buckets)]
        self.size = 0

    @classmethod
    def build(cls, table_id: int, n_columns: int, n_rows: int, partition_rows: int | None = None) -> "HashIndex":
        prows = partition_rows or max(1, n_rows)
        index = cls(table_id, bucket_count(prows), prows)
        for c in range(n_columns):
            for r in range(n_rows):
                index.insert(c, r)
        return index

    def location_for(self, column_id: int, row_id: int) -> ColumnLocation:
        part = row_id // self.partition_rows if self.partition_rows else 0
        return ColumnLocation(self.table_id, column_id, part)

    def insert(self, column_id: int, row_id: int, location: ColumnLocation | None = None) -> None:
        loc = location or self.location_for(column_id, row_id)
        self.buckets[hash_key(column_id, row_id, self.n_buckets)].append((column_id, row_id, loc))
        self.size += 1

    def probe(self, column_id: int, row_id: int) -> tuple[ColumnLocation, int]:
        """Return ``(location, chain nodes traversed)``."""
        chain = self.buckets[hash_key(column_id, row_id, self.n_buckets)]
        for i, (c, r, loc) in enumerate(chain, 1):
            if c == column_id and r == row_id:
                return loc, i
        raise KeyNotIndexed((self.table_id, column_id, row_id))

    def __contains__(self, key: tuple[int, int]) -> bool:
        try:
            self.probe(*key)
        except KeyNotIndexed:
            return False
        return True

    def chain_length(self, bucket: int) -> int:
        return len(self.buckets[bucket])


def lookup_column(index: HashIndex, key: RecordKey | tuple[int, int]) -> ColumnLocation:
    if isinstance(key, RecordKey):
        if key.table_id != index.table_id:
            raise KeyNotIndexed(key)
        return index.probe(key.column_id, key.row_id)[0]
    column_id, row_id = key
    return index.probe(column_id, row_id)[0]


def probe_timeline(node_counts: Sequence[int], node_ns: float, hash_ns: float = 1.0,
                   units: int = PROBE_UNITS) -> list[float]:
    """Completion times of lookups through the probe units and reorder buffer.

    The front end hashes one key per ``hash_ns``; a free probe unit walks the
    chain at ``node_ns`` per node; results retire in final-log order.
    """
    free = [0.0] * units
    retire: list[float] = []
    last = 0.0
    for i, nodes in enumerate(node_counts):
        issued = (i + 1) * hash_ns
        u = min(range(units), key=lambda j: (free[j], j))
        start = max(issued, free[u])
        done = start + nodes * node_ns
        free[u] = done
        last = max(last, done)  # in-order retirement
        retire.append(last)
    return retire


@dataclass
class ColumnBuffer:
    location: ColumnLocation
    updates: list[tuple[int, UpdateKind, int, int]] = field(default_factory=list)  # (row, kind, value, commit)

    def __len__(self) -> int:
        return len(self.updates)


@dataclass
class ShipResult:
    buffers: list[ColumnBuffer]
    nodes: list[int]  # chain nodes traversed per final-log entry, in order


def ship(final: FinalLog, indexes: HashIndex | dict[int, HashIndex]) -> list[ColumnBuffer]:
    return ship_with_stats(final, indexes).buffers


def ship_with_stats(final: FinalLog | Iterable[UpdateLogEntry],
                    indexes: HashIndex | dict[int, HashIndex]) -> ShipResult:
    """Partition the final log into per-column buffers, preserving commit order.

    Insert entries register their new cell in the index before the lookup.
    """
    if isinstance(indexes, HashIndex):
        indexes = {indexes.table_id: indexes}
    entries = final.entries if isinstance(final, FinalLog) else list(final)
    buffers: dict[ColumnLocation, ColumnBuffer] = {}
    nodes: list[int] = []
    prev = None
    for e in entries:
        if prev is not None and e.commit < prev:
            raise UnsortedInputLog("final log is not commit-ordered")
        prev = e.commit
        index = indexes.get(e.key.table_id)
        if index is None:
            raise KeyNotIndexed(e.key)
        if e.kind is UpdateKind.INSERT and (e.key.column_id, e.key.row_id) not in index:
            index.insert(e.key.column_id, e.key.row_id)
        loc, n = index.probe(e.key.column_id, e.key.row_id)
        nodes.append(n)
        buf = buffers.get(loc)
        if buf is None:
            buf = buffers[loc] = ColumnBuffer(loc)
        buf.updates.append((e.key.row_id, e.kind, e.data, e.commit))
    return ShipResult(list(buffers.values()), nodes)
