"""Straightforward plan evaluation over plain decoded values.

Used as the offline answer oracle: no codes, no segments, no tasks.
"""
from __future__ import annotations

from collections import Counter
from typing import Mapping, Sequence

from .operators import compare
from .plan import Agg, Filter, Join, Plan, Scan

Columns = Mapping[tuple[int, int], Sequence[int | None]]  # None marks a deleted row


def _rows(p: Plan, cols: Columns) -> list[tuple[int, int]]:
    if isinstance(p, Scan):
        return [(r, v) for r, v in enumerate(cols[p.col.key]) if v is not None]
    rows = _rows(p.child, cols)
    other = cols[p.col.key]
    if isinstance(p, Filter):
        return [(r, v) for r, v in rows if other[r] is not None and compare(p.op, other[r], p.const)]
    return [(r, other[r]) for r, _ in rows if other[r] is not None]


def _join(p: Join, cols: Columns) -> list[tuple[int, int]]:
    left = Counter(v for _, v in _rows(p.left, cols))
    right = Counter(v for _, v in _rows(p.right, cols))
    return sorted((v, left[v] * n) for v, n in right.items() if v in left)


def evaluate(p: Plan, cols: Columns):
    """Rows as sorted ``(row, value)``; joins as sorted ``(value, multiplicity)``; AGG as a scalar."""
    if isinstance(p, Agg):
        if isinstance(p.child, Join):
            pairs = _join(p.child, cols)
        else:
            pairs = [(v, 1) for _, v in _rows(p.child, cols)]
        if p.fn == "count":
            return sum(w for _, w in pairs)
        if p.fn == "sum":
            return sum(v * w for v, w in pairs)
        if not pairs:
            return None
        return (min if p.fn == "min" else max)(v for v, _ in pairs)
    if isinstance(p, Join):
        return _join(p, cols)
    return _rows(p, cols)
