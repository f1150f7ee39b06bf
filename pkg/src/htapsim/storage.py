"""Domain types and the order-preserving dictionary codec.

Values are signed 64-bit integers. A :class:`Dictionary` holds the sorted
distinct values of a column; a value's code is its rank in that order, so
code comparisons agree with value comparisons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CodeOutOfRange, EmptyDictionary, InvalidKey, ValueNotInDictionary

CODE_DTYPE = np.uint32
VALUE_DTYPE = np.int64

# Reserved code marking a deleted row; never a dictionary member.
TOMBSTONE = np.iinfo(CODE_DTYPE).max


class RecordKey(NamedTuple):
    table_id: int
    row_id: int
    column_id: int


def code_width(n_distinct: int) -> int:
    """Bits needed for fixed-width codes over ``n_distinct`` values (minimum 1)."""
    if n_distinct < 1:
        raise EmptyDictionary("code width of an empty dictionary is undefined")
    return max(1, math.ceil(math.log2(n_distinct)))


def packed_bytes(n_codes: int, width_bits: int) -> int:
    """Byte footprint used by the cost model for ``n_codes`` codes."""
    return (n_codes * width_bits + 7) // 8


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class Dictionary:
    """Sorted, duplicate-free values. Immutable once built."""

    __slots__ = ("values", "width_bits")

    def __init__(self, values: Iterable[int] | np.ndarray = (), *, _trusted: bool = False):
        arr = np.array(values, dtype=VALUE_DTYPE).reshape(-1)
        if not _trusted and arr.size > 1 and not bool(np.all(arr[1:] > arr[:-1])):
            raise ValueError("dictionary values must be strictly ascending")
        self.values = _frozen(arr)
        self.width_bits = code_width(arr.size) if arr.size else 1

    @classmethod
    def from_unsorted(cls, values: Iterable[int] | np.ndarray) -> "Dictionary":
        if not isinstance(values, np.ndarray):
            values = list(values)
        return cls(np.unique(np.asarray(values, dtype=VALUE_DTYPE)), _trusted=True)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):  # identity semantics for use as dict keys
        return id(self)

    def __repr__(self) -> str:
        shown = self.values.tolist() if len(self) <= 8 else self.values[:8].tolist() + ["..."]
        return f"Dictionary({shown}, width_bits={self.width_bits})"

    def tolist(self) -> list[int]:
        return self.values.tolist()

    @property
    def nbytes(self) -> int:
        return 8 * len(self)


def encode(d: Dictionary, value: int) -> int:
    if len(d) == 0:
        raise ValueNotInDictionary(value)
    i = int(np.searchsorted(d.values, value))
    if i >= len(d) or d.values[i] != value:
        raise ValueNotInDictionary(value)
    return i


def decode(d: Dictionary, code: int) -> int:
    if code < 0 or code >= len(d):
        raise CodeOutOfRange(f"code {code} outside dictionary of {len(d)} values")
    return int(d.values[code])


def encode_many(d: Dictionary, values: np.ndarray) -> np.ndarray:
    """Vectorized :func:`encode`; every value must be present."""
    values = np.asarray(values, dtype=VALUE_DTYPE)
    idx = np.searchsorted(d.values, values)
    if values.size:
        ok = idx < len(d)
        ok[ok] = d.values[idx[ok]] == values[ok]
        if not ok.all():
            raise ValueNotInDictionary(int(values[~ok][0]))
    return idx.astype(CODE_DTYPE)


@dataclass(frozen=True, eq=False)
class EncodedColumn:
    """Codes over a dictionary. Rows coded ``TOMBSTONE`` are deleted."""

    codes: np.ndarray
    dict: Dictionary
    version_id: int = 0

    def __post_init__(self):
        codes = self.codes
        if not (isinstance(codes, np.ndarray) and codes.dtype == CODE_DTYPE and not codes.flags.writeable):
            codes = _frozen(np.array(codes, dtype=CODE_DTYPE).reshape(-1))
        live = codes[codes != TOMBSTONE]
        if live.size and int(live.max()) >= len(self.dict):
            raise CodeOutOfRange(f"code {int(live.max())} >= dictionary size {len(self.dict)}")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_values(cls, values: Sequence[int] | np.ndarray, version_id: int = 0) -> "EncodedColumn":
        arr = np.asarray(values, dtype=VALUE_DTYPE)
        d = Dictionary(np.unique(arr), _trusted=True)
        return cls(encode_many(d, arr), d, version_id)

    def __len__(self) -> int:
        return int(self.codes.size)

    @property
    def live(self) -> np.ndarray:
        return self.codes != TOMBSTONE

    def decoded(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(values, live_mask)``; values at dead rows are 0."""
        live = self.live
        out = np.zeros(self.codes.size, dtype=VALUE_DTYPE)
        if len(self.dict):
            out[live] = self.dict.values[self.codes[live]]
        elif live.any():
            raise CodeOutOfRange("live code over an empty dictionary")
        return out, live

    def decoded_list(self) -> list[int | None]:
        vals, live = self.decoded()
        return [int(v) if ok else None for v, ok in zip(vals.tolist(), live.tolist())]

    def referenced_values(self) -> np.ndarray:
        live_codes = self.codes[self.live]
        return self.dict.values[np.unique(live_codes)] if live_codes.size else np.empty(0, VALUE_DTYPE)

    @property
    def nbytes(self) -> int:
        return packed_bytes(len(self), self.dict.width_bits) + self.dict.nbytes


class NsmTable:
    """Row store: ``rows[r, c]`` with a per-row liveness flag."""

    def __init__(self, table_id: int, rows: np.ndarray | Sequence[Sequence[int]]):
        arr = np.array(rows, dtype=VALUE_DTYPE)
        if arr.ndim != 2:
            raise ValueError("rows must be a 2-D array (rows x columns)")
        self.table_id = table_id
        self.n_columns = int(arr.shape[1])
        self._rows = arr
        self._n = int(arr.shape[0])
        self._live = np.ones(self._n, dtype=bool)

    @property
    def rows(self) -> np.ndarray:
        return self._rows[: self._n]

    @property
    def live(self) -> np.ndarray:
        return self._live[: self._n]

    def __len__(self) -> int:
        return self._n

    @property
    def row_bytes(self) -> int:
        return 8 * self.n_columns

    @property
    def nbytes(self) -> int:
        return self._n * self.row_bytes

    def check(self, row_id: int, column_id: int = 0, *, need_live: bool = True) -> None:
        if not (0 <= column_id < self.n_columns) or not (0 <= row_id < self._n):
            raise InvalidKey(RecordKey(self.table_id, row_id, column_id))
        if need_live and not self._live[row_id]:
            raise InvalidKey(RecordKey(self.table_id, row_id, column_id))

    def get(self, row_id: int, column_id: int) -> int:
        self.check(row_id, column_id)
        return int(self._rows[row_id, column_id])

    def set(self, row_id: int, column_id: int, value: int) -> None:
        self.check(row_id, column_id)
        self._rows[row_id, column_id] = value

    def append(self, values: Sequence[int]) -> int:
        if len(values) != self.n_columns:
            raise ValueError(f"row arity {len(values)} != schema width {self.n_columns}")
        if self._n == self._rows.shape[0]:
            grown = np.zeros((max(8, 2 * self._n), self.n_columns), dtype=VALUE_DTYPE)
            grown[: self._n] = self._rows[: self._n]
            live = np.zeros(grown.shape[0], dtype=bool)
            live[: self._n] = self._live[: self._n]
            self._rows, self._live = grown, live
        self._rows[self._n] = values
        self._live[self._n] = True
        self._n += 1
        return self._n - 1

    def delete(self, row_id: int) -> None:
        self._live[row_id] = False

    def column(self, column_id: int) -> tuple[np.ndarray, np.ndarray]:
        """Projection of one column as ``(values, live_mask)`` copies."""
        vals = self.rows[:, column_id].copy()
        live = self.live.copy()
        vals[~live] = 0
        return vals, live

    def copy(self) -> "NsmTable":
        t = NsmTable.__new__(NsmTable)
        t.table_id, t.n_columns, t._n = self.table_id, self.n_columns, self._n
        t._rows = self._rows[: self._n].copy()
        t._live = self._live[: self._n].copy()
        return t


@dataclass
class Database:
    """A set of NSM tables addressed by table id."""

    tables: dict[int, NsmTable] = field(default_factory=dict)

    def table(self, table_id: int) -> NsmTable:
        try:
            return self.tables[table_id]
        except KeyError:
            raise InvalidKey(f"unknown table {table_id}") from None

    def copy(self) -> "Database":
        return Database({tid: t.copy() for tid, t in self.tables.items()})

    @property
    def nbytes(self) -> int:
        return sum(t.nbytes for t in self.tables.values())
