"""Textual query plans.

Grammar (whitespace-separated tokens, children in parentheses)::

    plan   := SCAN col
            | FILTER col=COL op INT '(' plan ')'
            | SELECT col '(' plan ')'
            | AGG fn '(' plan ')'
            | JOIN '(' plan ')' '(' plan ')'
    col    := 'T' INT '.C' INT          e.g. T0.C2
    op     := lt | le | gt | ge | eq | ne
    fn     := sum | count | min | max

SCAN, FILTER and SELECT form a row stream over one table. FILTER keeps rows
whose value in ``col`` satisfies the predicate and passes the child's value
through; SELECT replaces the value with that of another column of the same
row. JOIN matches the values of two row streams and yields
``(value, multiplicity)`` pairs. AGG folds a row stream or a join and may only
appear at the root.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..errors import PlanSyntaxError

OPS = ("lt", "le", "gt", "ge", "eq", "ne")
AGG_FNS = ("sum", "count", "min", "max")

_COL = re.compile(r"^T(\d+)\.C(\d+)$")
_TOKEN = re.compile(r"\(|\)|[^\s()]+")


@dataclass(frozen=True)
class Col:
    table: int
    column: int

    def __str__(self) -> str:
        return f"T{self.table}.C{self.column}"

    @property
    def key(self) -> tuple[int, int]:
        return (self.table, self.column)


@dataclass(frozen=True)
class Scan:
    col: Col


@dataclass(frozen=True)
class Filter:
    col: Col
    op: str
    const: int
    child: "Plan"


@dataclass(frozen=True)
class Select:
    col: Col
    child: "Plan"


@dataclass(frozen=True)
class Agg:
    fn: str
    child: "Plan"


@dataclass(frozen=True)
class Join:
    left: "Plan"
    right: "Plan"


Plan = Union[Scan, Filter, Select, Agg, Join]
RowPlan = Union[Scan, Filter, Select]


def is_row_stream(p: Plan) -> bool:
    return isinstance(p, (Scan, Filter, Select))


def stream_table(p: RowPlan) -> int:
    while not isinstance(p, Scan):
        p = p.child
    return p.col.table


def scan_of(p: RowPlan) -> Scan:
    while not isinstance(p, Scan):
        p = p.child
    return p


def pipeline(p: RowPlan) -> list[RowPlan]:
    """Operators of a row stream from the scan upwards."""
    out = []
    while True:
        out.append(p)
        if isinstance(p, Scan):
            return out[::-1]
        p = p.child


def columns(p: Plan) -> list[Col]:
    """Distinct columns a plan touches, in first-use order."""
    seen: dict[Col, None] = {}

    def walk(q: Plan) -> None:
        if isinstance(q, Scan):
            seen.setdefault(q.col)
        elif isinstance(q, (Filter, Select)):
            walk(q.child)
            seen.setdefault(q.col)
        elif isinstance(q, Agg):
            walk(q.child)
        else:
            walk(q.left)
            walk(q.right)

    walk(p)
    return list(seen)


def format_plan(p: Plan) -> str:
    if isinstance(p, Scan):
        return f"SCAN {p.col}"
    if isinstance(p, Filter):
        return f"FILTER col={p.col} {p.op} {p.const} ({format_plan(p.child)})"
    if isinstance(p, Select):
        return f"SELECT {p.col} ({format_plan(p.child)})"
    if isinstance(p, Agg):
        return f"AGG {p.fn} ({format_plan(p.child)})"
    return f"JOIN ({format_plan(p.left)}) ({format_plan(p.right)})"


class _Parser:
    def __init__(self, text: str):
        self.toks = _TOKEN.findall(text)
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise PlanSyntaxError("unexpected end of plan")
        if expect is not None and tok != expect:
            raise PlanSyntaxError(f"expected {expect!r}, got {tok!r}")
        self.i += 1
        return tok

    def col(self, tok: str) -> Col:
        m = _COL.match(tok)
        if not m:
            raise PlanSyntaxError(f"bad column reference {tok!r}")
        return Col(int(m.group(1)), int(m.group(2)))

    def child(self) -> Plan:
        self.take("(")
        p = self.plan()
        self.take(")")
        return p

    def plan(self) -> Plan:
        kw = self.take().upper()
        if kw == "SCAN":
            return Scan(self.col(self.take()))
        if kw == "FILTER":
            spec = self.take()
            if not spec.startswith("col="):
                raise PlanSyntaxError(f"FILTER expects col=..., got {spec!r}")
            col = self.col(spec[4:])
            op = self.take().lower()
            if op not in OPS:
                raise PlanSyntaxError(f"unknown comparison {op!r}")
            raw = self.take()
            try:
                const = int(raw)
            except ValueError:
                raise PlanSyntaxError(f"FILTER constant must be an integer, got {raw!r}") from None
            return Filter(col, op, const, self.child())
        if kw == "SELECT":
            return Select(self.col(self.take()), self.child())
        if kw == "AGG":
            fn = self.take().lower()
            if fn not in AGG_FNS:
                raise PlanSyntaxError(f"unknown aggregate {fn!r}")
            return Agg(fn, self.child())
        if kw == "JOIN":
            return Join(self.child(), self.child())
        raise PlanSyntaxError(f"unknown operator {kw!r}")


def validate(p: Plan, root: bool = True) -> None:
    if isinstance(p, (Filter, Select)):
        if not is_row_stream(p.child):
            raise PlanSyntaxError(f"{type(p).__name__.upper()} needs a row-stream input")
        if p.col.table != stream_table(p.child):
            raise PlanSyntaxError(f"{p.col} is not in table T{stream_table(p.child)}")
        validate(p.child, False)
    elif isinstance(p, Agg):
        if not root:
            raise PlanSyntaxError("AGG may only appear at the root")
        validate(p.child, False)
    elif isinstance(p, Join):
        for side in (p.left, p.right):
            if not is_row_stream(side):
                raise PlanSyntaxError("JOIN inputs must be row streams")
            validate(side, False)


def parse_plan(text: str) -> Plan:
    ps = _Parser(text)
    p = ps.plan()
    if ps.peek() is not None:
        raise PlanSyntaxError(f"trailing input at {ps.peek()!r}")
    validate(p)
    return p
