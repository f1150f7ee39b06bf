"""Applying shipped column buffers to dictionary-encoded columns.

``apply_naive`` decodes, patches, re-sorts and re-encodes the whole column.
``apply_optimized`` never decodes: it sorts only the update values, merges
that small dictionary into the old one with a linear scan, and recodes the
old codes through the resulting old-code -> new-code table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import RowOutOfRange
from .propagation import ColumnBuffer
from .storage import (CODE_DTYPE, TOMBSTONE, VALUE_DTYPE, Dictionary, EncodedColumn,
                      encode_many)
from .txn import UpdateKind

SORTER_WIDTH = 1024
COMPACTION_RATIO = 4

Update = tuple  # (row_id, UpdateKind, value, commit)


class RecodeMap(NamedTuple):
    old_to_new: np.ndarray  # indexed by old code
    upd_to_new: np.ndarray  # indexed by update-dictionary code


@dataclass
class ApplyStats:
    """Operation counts charged by the cost model, accumulated over calls."""

    naive: int = 0
    optimized: int = 0
    rounds: int = 0
    compactions: int = 0


def _log2c(x: int) -> int:
    return math.ceil(math.log2(x)) if x > 1 else 0


def naive_charge(n: int, m: int, d: int) -> int:
    """Decode n, patch m, sort n+m, re-encode n by binary search over d."""
    return n + m + (n + m) * _log2c(n + m) + n * _log2c(max(d, 1))


def optimized_charge(n: int, m: int, d_old: int, d_upd: int) -> int:
    """Sort m update values, linear dictionary merge, one recode per row plus m patches."""
    return m * _log2c(m) + d_old + d_upd + n + m


def _updates_of(updates: ColumnBuffer | Iterable[Update]) -> list[Update]:
    ups = list(updates.updates if isinstance(updates, ColumnBuffer) else updates)
    commits = [u[3] for u in ups]
    if any(b < a for a, b in zip(commits, commits[1:])):
        ups.sort(key=lambda u: u[3])
    return ups


def _check_rows(ups: Sequence[Update], n: int) -> int:
    """Validate row ids and return the row count after inserts."""
    size = n
    for row, kind, _, _ in ups:
        if row < 0:
            raise RowOutOfRange(row)
        if kind is UpdateKind.INSERT:
            size = max(size, row + 1)
        elif row >= size:
            raise RowOutOfRange(row)
    return size


def apply_naive(col: EncodedColumn, updates: ColumnBuffer | Iterable[Update],
                stats: ApplyStats | None = None) -> EncodedColumn:
    ups = _updates_of(updates)
    n = len(col)
    size = _check_rows(ups, n)
    values = np.zeros(size, dtype=VALUE_DTYPE)
    live = np.zeros(size, dtype=bool)
    values[:n], live[:n] = col.decoded()
    for row, kind, value, _ in ups:
        if kind is UpdateKind.DELETE:
            live[row] = False
        else:
            values[row] = value
            live[row] = True
    d = Dictionary(np.unique(values[live]), _trusted=True)
    codes = np.full(size, TOMBSTONE, dtype=CODE_DTYPE)
    codes[live] = encode_many(d, values[live])
    if stats is not None:
        stats.naive += naive_charge(n, len(ups), len(d))
    return EncodedColumn(codes, d, col.version_id + 1)


def build_update_dictionary(updates: ColumnBuffer | Iterable[Update] | Iterable[int]) -> Dictionary:
    """Sorted distinct payloads of inserts and modifies (plain ints are taken as payloads)."""
    src = updates.updates if isinstance(updates, ColumnBuffer) else updates
    vals = []
    for u in src:
        if isinstance(u, tuple):
            if u[1] is not UpdateKind.DELETE:
                vals.append(u[2])
        else:
            vals.append(u)
    d = Dictionary.from_unsorted(vals)
    if len(d) > SORTER_WIDTH:
        raise ValueError(f"{len(d)} distinct update values exceed one sorter round ({SORTER_WIDTH})")
    return d


def merge_dictionaries(old: Dictionary, upd: Dictionary) -> tuple[Dictionary, RecodeMap]:
    """Sorted union of two dictionaries by a single linear scan."""
    a, b = old.values.tolist(), upd.values.tolist()
    out: list[int] = []
    old_map = [0] * len(a)
    upd_map = [0] * len(b)
    i = j = 0
    while i < len(a) or j < len(b):
        if j == len(b) or (i < len(a) and a[i] < b[j]):
            old_map[i] = len(out)
            out.append(a[i])
            i += 1
        elif i == len(a) or b[j] < a[i]:
            upd_map[j] = len(out)
            out.append(b[j])
            j += 1
        else:
            old_map[i] = upd_map[j] = len(out)
            out.append(a[i])
            i += 1
            j += 1
    new = Dictionary(out, _trusted=True)
    return new, RecodeMap(np.array(old_map, dtype=CODE_DTYPE), np.array(upd_map, dtype=CODE_DTYPE))


def _rounds(ups: list[Update]) -> list[list[Update]]:
    """Split into consecutive chunks with at most SORTER_WIDTH distinct payloads each."""
    rounds: list[list[Update]] = []
    cur: list[Update] = []
    seen: set[int] = set()
    for u in ups:
        if u[1] is not UpdateKind.DELETE and u[2] not in seen and len(seen) == SORTER_WIDTH:
            rounds.append(cur)
            cur, seen = [], set()
        cur.append(u)
        if u[1] is not UpdateKind.DELETE:
            seen.add(u[2])
    if cur:
        rounds.append(cur)
    return rounds


def _apply_round(codes: np.ndarray, d: Dictionary, ups: list[Update],
                 stats: ApplyStats | None) -> tuple[np.ndarray, Dictionary]:
    n = codes.size
    size = _check_rows(ups, n)
    # Last write per row wins; only surviving payloads enter the update dictionary.
    final: dict[int, Update] = {}
    for u in ups:
        final[u[0]] = u
    effective = list(final.values())
    upd = build_update_dictionary(effective)
    new_dict, recode = merge_dictionaries(d, upd)
    out = np.full(size, TOMBSTONE, dtype=CODE_DTYPE)
    live = codes != TOMBSTONE
    out[:n][live] = recode.old_to_new[codes[live]]
    if effective:
        rows = np.array([u[0] for u in effective], dtype=np.int64)
        dead = np.array([u[1] is UpdateKind.DELETE for u in effective])
        vals = np.array([0 if u[1] is UpdateKind.DELETE else u[2] for u in effective], dtype=VALUE_DTYPE)
        out[rows[dead]] = TOMBSTONE
        if (~dead).any():
            out[rows[~dead]] = recode.upd_to_new[np.searchsorted(upd.values, vals[~dead])]
    if stats is not None:
        stats.optimized += optimized_charge(n, len(ups), len(d), len(upd))
        stats.rounds += 1
    return out, new_dict


def compact(col: EncodedColumn) -> EncodedColumn:
    """Drop dictionary values no live row references."""
    live = col.live
    used = np.unique(col.codes[live])
    d = Dictionary(col.dict.values[used], _trusted=True)
    remap = np.zeros(max(len(col.dict), 1), dtype=CODE_DTYPE)
    remap[used] = np.arange(used.size, dtype=CODE_DTYPE)
    codes = np.full(len(col), TOMBSTONE, dtype=CODE_DTYPE)
    codes[live] = remap[col.codes[live]]
    return EncodedColumn(codes, d, col.version_id)


def apply_optimized(col: EncodedColumn, updates: ColumnBuffer | Iterable[Update],
                    stats: ApplyStats | None = None, *,
                    compaction_ratio: float | None = COMPACTION_RATIO) -> EncodedColumn:
    ups = _updates_of(updates)
    if not ups:
        return col
    _check_rows(ups, len(col))
    codes, d = np.asarray(col.codes), col.dict
    for chunk in _rounds(ups):
        codes, d = _apply_round(codes, d, chunk, stats)
    out = EncodedColumn(codes, d, col.version_id + 1)
    if compaction_ratio is not None:
        referenced = len(np.unique(out.codes[out.live]))
        if len(out.dict) > compaction_ratio * max(referenced, 1):
            out = compact(out)
            if stats is not None:
                stats.compactions += 1
                stats.optimized += naive_charge(len(out), 0, len(out.dict))
    return out


ColumnId = tuple  # (table_id, column_id)


@dataclass
class ColumnReplica:
    """Main analytical replica: one published :class:`EncodedColumn` per column.

    ``publish`` swaps the whole (codes, dictionary) pair in a single
    assignment, so a reader always sees a matching pair.
    """

    columns: dict[ColumnId, EncodedColumn] = field(default_factory=dict)
    stats: ApplyStats = field(default_factory=ApplyStats)

    @classmethod
    def from_table(cls, table_id: int, rows: np.ndarray, live: np.ndarray | None = None) -> "ColumnReplica":
        rep = cls()
        rep.load_table(table_id, rows, live)
        return rep

    def load_table(self, table_id: int, rows: np.ndarray, live: np.ndarray | None = None) -> None:
        rows = np.asarray(rows, dtype=VALUE_DTYPE)
        live = np.ones(rows.shape[0], dtype=bool) if live is None else np.asarray(live, dtype=bool)
        for c in range(rows.shape[1]):
            d = Dictionary(np.unique(rows[live, c]), _trusted=True)
            codes = np.full(rows.shape[0], TOMBSTONE, dtype=CODE_DTYPE)
            codes[live] = encode_many(d, rows[live, c])
            self.columns[(table_id, c)] = EncodedColumn(codes, d)

    def current(self, column: ColumnId) -> EncodedColumn:
        return self.columns[column]

    def publish(self, column: ColumnId, new: EncodedColumn) -> None:
        self.columns[column] = new

    def apply(self, buffer: ColumnBuffer, *, naive: bool = False) -> EncodedColumn:
        key = (buffer.location.table_id, buffer.location.column_id)
        old = self.columns[key]
        fn = apply_naive if naive else apply_optimized
        new = fn(old, buffer, self.stats)
        self.publish(key, new)
        return new

    def decoded(self, column: ColumnId) -> list[int | None]:
        return self.columns[column].decoded_list()

    @property
    def nbytes(self) -> int:
        return sum(c.nbytes for c in self.columns.values())
