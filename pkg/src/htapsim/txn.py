"""Row-store transactional engine with per-thread ordered update logs."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

from .errors import DeleteOfMissingRow, InvalidKey
from .storage import Database, RecordKey

DEFAULT_LOG_CAPACITY = 1024


class UpdateKind(enum.Enum):
    INSERT = "insert"
    DELETE = "delete"
    MODIFY = "modify"


class Read(enum.Enum):
    READ = "read"


READ = Read.READ
OpKind = Union[UpdateKind, Read]


class UpdateLogEntry(NamedTuple):
    commit: int
    kind: UpdateKind
    data: int
    key: RecordKey


class TxnOp(NamedTuple):
    key: RecordKey
    kind: OpKind
    value: int | Sequence[int] | None = None


@dataclass
class ThreadUpdateLog:
    """Append-only log written by exactly one transactional thread."""

    thread_id: int
    entries: list[UpdateLogEntry] = field(default_factory=list)
    shipped: int = 0  # entries[:shipped] have been handed to propagation

    def append(self, entry: UpdateLogEntry) -> None:
        if self.entries and entry.commit < self.entries[-1].commit:
            raise ValueError("log entries must be appended in commit order")
        self.entries.append(entry)

    @property
    def pending(self) -> list[UpdateLogEntry]:
        return self.entries[self.shipped:]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class TxnResult:
    commit: int | None
    reads: list[int]
    writes: int


class TxnIsland:
    """Executes single-statement read/write batches against the NSM replica.

    Every write batch gets one commit id from a global counter; each written
    cell is logged to the issuing thread's log in commit order.
    """

    def __init__(self, db: Database, n_threads: int, *, log_capacity: int = DEFAULT_LOG_CAPACITY,
                 logging: bool = True):
        self.db = db
        self.logs = [ThreadUpdateLog(t) for t in range(n_threads)]
        self.log_capacity = log_capacity
        self.logging = logging
        self._next_commit = 1

    @property
    def last_commit(self) -> int:
        return self._next_commit - 1

    def execute_txn_query(self, thread_id: int, ops: Iterable[TxnOp | tuple]) -> TxnResult:
        ops = [op if isinstance(op, TxnOp) else TxnOp(*op) for op in ops]
        undo: list[tuple] = []
        reads: list[int] = []
        pending: list[tuple[UpdateKind, int, RecordKey]] = []
        try:
            for key, kind, value in ops:
                table = self.db.table(key.table_id)
                if kind is READ:
                    reads.append(table.get(key.row_id, key.column_id))
                elif kind is UpdateKind.MODIFY:
                    old = table.get(key.row_id, key.column_id)
                    table.set(key.row_id, key.column_id, int(value))
                    undo.append(("set", table, key, old))
                    pending.append((kind, int(value), key))
                elif kind is UpdateKind.DELETE:
                    try:
                        table.check(key.row_id)
                    except InvalidKey:
                        raise DeleteOfMissingRow(key) from None
                    table.delete(key.row_id)
                    undo.append(("delete", table, key, None))
                    # one entry per column so every column replica tombstones the row
                    for c in range(table.n_columns):
                        pending.append((kind, 0, RecordKey(key.table_id, key.row_id, c)))
                elif kind is UpdateKind.INSERT:
                    row = [int(v) for v in value]
                    rid = table.append(row)
                    undo.append(("insert", table, key, None))
                    for c, v in enumerate(row):
                        pending.append((kind, v, RecordKey(key.table_id, rid, c)))
                else:
                    raise InvalidKey(f"unknown operation kind {kind!r}")
        except Exception:
            self._rollback(undo)
            raise
        if not pending:
            return TxnResult(None, reads, 0)
        commit = self._next_commit
        self._next_commit += 1
        if self.logging:
            log = self.logs[thread_id]
            for kind, data, key in pending:
                log.append(UpdateLogEntry(commit, kind, data, key))
        return TxnResult(commit, reads, len(pending))

    @staticmethod
    def _rollback(undo: list[tuple]) -> None:
        for action, table, key, old in reversed(undo):
            if action == "set":
                table.set(key.row_id, key.column_id, old)
            elif action == "delete":
                table._live[key.row_id] = True
            else:  # insert: the appended row is always the last one
                table._n -= 1

    def pending_update_count(self) -> int:
        return sum(len(log.entries) - log.shipped for log in self.logs)

    def should_propagate(self) -> bool:
        return self.pending_update_count() >= self.log_capacity

    def pending_logs(self) -> list[list[UpdateLogEntry]]:
        return [log.pending for log in self.logs]

    def mark_shipped(self, watermark: int) -> int:
        """Advance every log past entries with commit <= ``watermark``."""
        moved = 0
        for log in self.logs:
            i = log.shipped
            while i < len(log.entries) and log.entries[i].commit <= watermark:
                i += 1
            moved += i - log.shipped
            log.shipped = i
        return moved
