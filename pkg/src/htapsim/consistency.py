"""Snapshot mechanisms.

:class:`SnapshotManager` keeps one chain of immutable column versions per
column and materializes a new version only when a query needs one and the
column changed since the last version. The two baselines used for comparison
are per-tuple version chains and whole-replica copies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Generic, Hashable, Iterable, Protocol, TypeVar

from .application import ColumnId, ColumnReplica
from .errors import DoubleRelease, NoVisibleVersion, UnknownColumn
from .storage import EncodedColumn


@dataclass(frozen=True, eq=False)
class ColumnVersion:
    version_id: int
    column: EncodedColumn

    @property
    def codes(self):
        return self.column.codes

    @property
    def dict(self):
        return self.column.dict

    @property
    def nbytes(self) -> int:
        return self.column.nbytes


@dataclass
class SnapshotChain:
    versions: list[ColumnVersion]  # oldest first; head is versions[-1]
    dirty: bool = False
    readers: dict[int, int] = field(default_factory=dict)  # version_id -> active readers

    @property
    def head(self) -> ColumnVersion:
        return self.versions[-1]

    def __len__(self) -> int:
        return len(self.versions)


class SnapshotManager:
    def __init__(self, replica: ColumnReplica):
        self.replica = replica
        self.chains: dict[ColumnId, SnapshotChain] = {}
        self._held: dict[Hashable, list[tuple[ColumnId, ColumnVersion]]] = {}
        self._released: set[Hashable] = set()
        self._next_version = 0
        self.copies = 0
        self.copied_bytes = 0
        self.last_copy_bytes = 0
        self.last_copied: list[ColumnId] = []

    def _new_version(self, column: ColumnId) -> ColumnVersion:
        v = ColumnVersion(self._next_version, self.replica.current(column))
        self._next_version += 1
        return v

    def chain(self, column: ColumnId) -> SnapshotChain:
        ch = self.chains.get(column)
        if ch is None:
            if column not in self.replica.columns:
                raise UnknownColumn(column)
            ch = self.chains[column] = SnapshotChain([self._new_version(column)])
        return ch

    def mark_dirty(self, column: ColumnId) -> None:
        self.chain(column).dirty = True

    def acquire_snapshot(self, query_id: Hashable, columns: Iterable[ColumnId]) -> list[ColumnVersion]:
        columns = list(columns)
        for c in columns:  # validate the whole set before taking anything
            if c not in self.replica.columns:
                raise UnknownColumn(c)
        self.last_copy_bytes = 0
        self.last_copied: list[ColumnId] = []
        got: list[ColumnVersion] = []
        for c in columns:
            ch = self.chain(c)
            if ch.dirty:
                v = self._new_version(c)
                ch.versions.append(v)
                ch.dirty = False
                self.copies += 1
                self.last_copy_bytes += v.nbytes
                self.last_copied.append(c)
            v = ch.head
            ch.readers[v.version_id] = ch.readers.get(v.version_id, 0) + 1
            got.append(v)
        self.copied_bytes += self.last_copy_bytes
        self._held.setdefault(query_id, []).extend(zip(columns, got))
        self._released.discard(query_id)
        return got

    def release_snapshot(self, query_id: Hashable) -> None:
        held = self._held.pop(query_id, None)
        if held is None:
            raise DoubleRelease(query_id)
        self._released.add(query_id)
        for c, v in held:
            ch = self.chains[c]
            ch.readers[v.version_id] -= 1
            if ch.readers[v.version_id] == 0:
                del ch.readers[v.version_id]
        for c in {c for c, _ in held}:
            self._collect(self.chains[c])

    @staticmethod
    def _collect(ch: SnapshotChain) -> None:
        head = ch.head
        ch.versions = [v for v in ch.versions if v is head or ch.readers.get(v.version_id, 0) > 0]

    def active_queries(self) -> int:
        return len(self._held)


# Per-tuple multiversioning baseline

T = TypeVar("T")


@dataclass
class TupleVersionChain(Generic[T]):
    """Versions newest first; timestamps strictly decrease along the list."""

    versions: list[tuple[int, T]] = field(default_factory=list)

    def install(self, ts: int, value: T) -> None:
        if self.versions and ts <= self.versions[0][0]:
            raise ValueError(f"timestamp {ts} not newer than {self.versions[0][0]}")
        self.versions.insert(0, (ts, value))

    def read(self, ts: int) -> tuple[T, int]:
        """Return ``(value, nodes traversed)`` for the newest version at or before ``ts``."""
        for i, (vts, value) in enumerate(self.versions, 1):
            if vts <= ts:
                return value, i
        raise NoVisibleVersion(ts)

    def __len__(self) -> int:
        return len(self.versions)


def mvcc_read(chain: TupleVersionChain[T], ts: int) -> T:
    return chain.read(ts)[0]


# Whole-replica copy baseline

class _Copyable(Protocol):
    nbytes: int

    def copy(self) -> Any: ...


def full_copy_snapshot(replica: _Copyable, bandwidth: float) -> tuple[Any, float]:
    """Deep copy plus the time to stream every byte through a channel of ``bandwidth`` B/ns."""
    return replica.copy(), (replica.nbytes / bandwidth if replica.nbytes else 0.0)


class FullCopySnapshotter:
    """Takes a fresh full copy only when the replica changed since the last one."""

    def __init__(self, bandwidth: float):
        self.bandwidth = bandwidth
        self.dirty = True
        self.snapshot: Any = None
        self.copies = 0
        self.copied_bytes = 0

    def mark_dirty(self) -> None:
        self.dirty = True

    def take(self, replica: _Copyable) -> tuple[Any, float]:
        if not self.dirty and self.snapshot is not None:
            return self.snapshot, 0.0
        self.snapshot, cost = full_copy_snapshot(replica, self.bandwidth)
        self.dirty = False
        self.copies += 1
        self.copied_bytes += replica.nbytes
        return self.snapshot, cost
