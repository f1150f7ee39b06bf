"""Pull-based (open/next/close) physical operators over encoded columns."""
from __future__ import annotations

import operator
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple

import numpy as np

from ..storage import TOMBSTONE, Dictionary, EncodedColumn
from .plan import Agg, Col, Filter, Join, RowPlan, Scan, pipeline


class Item(NamedTuple):
    row: int | None
    value: int
    weight: int = 1


_CMP = {"lt": operator.lt, "le": operator.le, "gt": operator.gt,
        "ge": operator.ge, "eq": operator.eq, "ne": operator.ne}


def compare(op: str, value: int, const: int) -> bool:
    return _CMP[op](value, const)


def code_range(d: Dictionary, op: str, const: int) -> tuple[int, int, int | None]:
    """Codes satisfying ``value <op> const`` as ``[lo, hi)`` minus an optional excluded code.

    Relies on the dictionary being sorted so code order matches value order.
    """
    vals = d.values
    left = int(np.searchsorted(vals, const, side="left"))
    right = int(np.searchsorted(vals, const, side="right"))
    n = len(d)
    if op == "lt":
        return 0, left, None
    if op == "le":
        return 0, right, None
    if op == "gt":
        return right, n, None
    if op == "ge":
        return left, n, None
    if op == "eq":
        return left, right, None
    return 0, n, (left if right > left else None)  # ne


class Operator:
    def open(self) -> None:
        pass

    def next(self) -> Item | None:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __iter__(self) -> Iterator[Item]:
        self.open()
        try:
            while (item := self.next()) is not None:
                yield item
        finally:
            self.close()


class ScanOp(Operator):
    """Live rows of one column segment, decoded."""

    def __init__(self, col: EncodedColumn, start: int = 0, end: int | None = None):
        self.col = col
        self.start = start
        self.end = len(col) if end is None else min(end, len(col))

    def open(self) -> None:
        self.pos = self.start
        self.codes = self.col.codes
        self.values = self.col.dict.values

    def next(self) -> Item | None:
        while self.pos < self.end:
            r = self.pos
            self.pos += 1
            c = self.codes[r]
            if c != TOMBSTONE:
                return Item(r, int(self.values[c]))
        return None


class FilterOp(Operator):
    """Keeps child rows whose code in ``col`` falls in the predicate's code range."""

    def __init__(self, child: Operator, col: EncodedColumn, op: str, const: int):
        self.child = child
        self.col = col
        self.lo, self.hi, self.skip = code_range(col.dict, op, const)

    def open(self) -> None:
        self.child.open()

    def next(self) -> Item | None:
        codes = self.col.codes
        while (item := self.child.next()) is not None:
            c = codes[item.row] if item.row < len(codes) else TOMBSTONE
            if c != TOMBSTONE and self.lo <= c < self.hi and c != self.skip:
                return item
        return None

    def close(self) -> None:
        self.child.close()


class SelectOp(Operator):
    def __init__(self, child: Operator, col: EncodedColumn):
        self.child = child
        self.col = col

    def open(self) -> None:
        self.child.open()

    def next(self) -> Item | None:
        codes, vals = self.col.codes, self.col.dict.values
        while (item := self.child.next()) is not None:
            c = codes[item.row] if item.row < len(codes) else TOMBSTONE
            if c != TOMBSTONE:
                return Item(item.row, int(vals[c]), item.weight)
        return None

    def close(self) -> None:
        self.child.close()


def build_pipeline(p: RowPlan, cols: Mapping[tuple[int, int], EncodedColumn],
                   start: int = 0, end: int | None = None) -> Operator:
    op: Operator | None = None
    for node in pipeline(p):
        col = _column(cols, node.col)
        if isinstance(node, Scan):
            op = ScanOp(col, start, end)
        elif isinstance(node, Filter):
            op = FilterOp(op, col, node.op, node.const)
        else:
            op = SelectOp(op, col)
    return op


def _column(cols: Mapping, c: Col) -> EncodedColumn:
    v = cols[c.key]
    return getattr(v, "column", v)  # accept snapshot versions as well as columns


@dataclass
class AggState:
    count: int = 0
    total: int = 0
    lo: int | None = None
    hi: int | None = None

    def add(self, value: int, weight: int = 1) -> None:
        self.count += weight
        self.total += value * weight
        self.lo = value if self.lo is None or value < self.lo else self.lo
        self.hi = value if self.hi is None or value > self.hi else self.hi

    def merge(self, other: "AggState") -> "AggState":
        out = AggState(self.count + other.count, self.total + other.total, self.lo, self.hi)
        if other.lo is not None:
            out.lo = other.lo if out.lo is None else min(out.lo, other.lo)
            out.hi = other.hi if out.hi is None else max(out.hi, other.hi)
        return out

    def result(self, fn: str) -> int | None:
        return {"sum": self.total, "count": self.count, "min": self.lo, "max": self.hi}[fn]


class AggOp(Operator):
    """Folds its whole input into one item whose value is the aggregate (None if undefined)."""

    def __init__(self, child: Operator, fn: str):
        self.child = child
        self.fn = fn

    def open(self) -> None:
        self.child.open()
        self.done = False

    def next(self):
        if self.done:
            return None
        st = AggState()
        while (item := self.child.next()) is not None:
            st.add(item.value, item.weight)
        self.done = True
        return Item(None, st.result(self.fn))

    def close(self) -> None:
        self.child.close()


class HashJoinOp(Operator):
    """Builds a value -> multiplicity table from the left input, probes with the right."""

    def __init__(self, left: Operator, right: Operator):
        self.left = left
        self.right = right

    def open(self) -> None:
        self.table: Counter = Counter()
        for item in self.left:
            self.table[item.value] += item.weight
        self.right.open()

    def next(self) -> Item | None:
        while (item := self.right.next()) is not None:
            hits = self.table.get(item.value, 0)
            if hits:
                return Item(None, item.value, hits * item.weight)
        return None

    def close(self) -> None:
        self.right.close()


def collect_join(items) -> list[tuple[int, int]]:
    acc: Counter = Counter()
    for it in items:
        acc[it.value] += it.weight
    return sorted(acc.items())


def execute_operator(op: Operator) -> list[Item]:
    """Drain an operator tree."""
    return list(op)


def run_plan(plan, cols: Mapping[tuple[int, int], EncodedColumn]):
    """Evaluate a whole plan as a single operator tree over full columns."""
    def tree(p) -> Operator:
        if isinstance(p, Join):
            return HashJoinOp(tree(p.left), tree(p.right))
        return build_pipeline(p, cols)

    if isinstance(plan, Agg):
        return execute_operator(AggOp(tree(plan.child), plan.fn))[0].value
    items = execute_operator(tree(plan))
    if isinstance(plan, Join):
        return collect_join(items)
    return sorted((it.row, it.value) for it in items)
