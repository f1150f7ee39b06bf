"""Breaking a plan into segment-sized tasks and executing them."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import UnplacedColumn
from ..storage import EncodedColumn, packed_bytes
from .operators import AggState, build_pipeline
from .placement import PlacementPlan, Strategy
from .plan import Agg, Join, Plan, RowPlan, Scan, Select, pipeline, scan_of

SEGMENT_ROWS = 1000
PARTIAL_BYTES = 32


@dataclass
class Task:
    task_id: int
    kind: str  # pipe | partial | combine | build | probe | generic
    home_vault: int
    deps: frozenset[int] = frozenset()
    segment: tuple[int, int] = (0, 0)
    pinned: bool = False
    reads: tuple[tuple[int, int], ...] = ()  # (vault, bytes) of input data
    dict_reads: tuple[tuple[frozenset[int], int], ...] = ()  # (vaults holding a copy, bytes)
    tuples: int = 0  # compute work in tuple-steps
    node: Any = None
    query_id: Any = None

    @property
    def rows(self) -> int:
        return self.segment[1] - self.segment[0]


@dataclass
class TaskGraph:
    tasks: dict[int, Task] = field(default_factory=dict)
    root: Plan | None = None
    root_ids: list[int] = field(default_factory=list)  # tasks whose outputs form the answer

    def add(self, task: Task) -> Task:
        self.tasks[task.task_id] = task
        return task

    def __len__(self) -> int:
        return len(self.tasks)

    def edges(self) -> list[tuple[int, int]]:
        return [(d, t.task_id) for t in self.tasks.values() for d in sorted(t.deps)]


class _Ids:
    def __init__(self, start: int):
        self.n = start

    def __call__(self) -> int:
        self.n += 1
        return self.n - 1


def _column_info(cols: Mapping, key) -> EncodedColumn:
    v = cols[key]
    return getattr(v, "column", v)


def _pipe_tasks(p: RowPlan, cols: Mapping, placements: Mapping[tuple[int, int], PlacementPlan],
                g: TaskGraph, ids: _Ids, query_id, segment_rows: int) -> list[Task]:
    nodes = pipeline(p)
    for node in nodes:
        if node.col.key not in placements:
            raise UnplacedColumn(node.col.key)
    scan = scan_of(p)
    sp = placements[scan.col.key]
    n_rows = len(_column_info(cols, scan.col.key))
    pinned = sp.strategy is Strategy.LOCAL
    parts = list(sp.partitions)
    if parts and n_rows > parts[-1].end:  # rows appended after placement belong to the last partition
        last = parts[-1]
        parts[-1] = type(last)(last.start, n_rows, last.vault)
    out = []
    for part in parts:
        for s in range(part.start, min(part.end, n_rows), segment_rows):
            e = min(s + segment_rows, part.end, n_rows)
            reads, dreads = [], []
            for i, node in enumerate(nodes):
                pl = placements[node.col.key]
                col = _column_info(cols, node.col.key)
                w = col.dict.width_bits
                for v, rows in pl.vaults_for(s, e):
                    reads.append((v, packed_bytes(rows, w)))
                decode = isinstance(node, Select) or (isinstance(node, Scan) and not any(isinstance(x, Select) for x in nodes))
                dreads.append((pl.dict_vaults, col.dict.nbytes if decode else 8 * w))
            out.append(g.add(Task(ids(), "pipe", part.vault, frozenset(), (s, e), pinned,
                                  tuple(reads), tuple(dreads), (e - s) * len(nodes), p, query_id)))
    return out


def decompose(plan: Plan, placements: Mapping[tuple[int, int], PlacementPlan], cols: Mapping,
              *, query_id=None, first_id: int = 0, segment_rows: int = SEGMENT_ROWS) -> TaskGraph:
    """One task per operator pipeline per segment, plus reduction and join phases."""
    g = TaskGraph(root=plan)
    ids = _Ids(first_id)
    body = plan.child if isinstance(plan, Agg) else plan
    if isinstance(body, Join):
        left = _pipe_tasks(body.left, cols, placements, g, ids, query_id, segment_rows)
        right = _pipe_tasks(body.right, cols, placements, g, ids, query_id, segment_rows)
        builds = [g.add(Task(ids(), "build", t.home_vault, frozenset({t.task_id}), t.segment, t.pinned,
                             (), (), t.rows, None, query_id)) for t in left]
        build_ids = frozenset(b.task_id for b in builds)
        distinct = len(_column_info(cols, pipeline(body.left)[-1].col.key).dict)
        # A build table holds one (value, count) pair per distinct value it saw.
        table_reads = tuple((b.home_vault, 16 * min(b.rows, distinct)) for b in builds)
        leaves = [g.add(Task(ids(), "probe", t.home_vault, build_ids | {t.task_id}, t.segment, t.pinned,
                             table_reads, (), t.rows, None, query_id)) for t in right]
    else:
        leaves = _pipe_tasks(body, cols, placements, g, ids, query_id, segment_rows)
    if not isinstance(plan, Agg):
        g.root_ids = [t.task_id for t in leaves]
        return g
    partials = [g.add(Task(ids(), "partial", t.home_vault, frozenset({t.task_id}), t.segment, t.pinned,
                           (), (), t.rows, plan, query_id)) for t in leaves]
    scan = scan_of(body.left if isinstance(body, Join) else body)
    owner = placements[scan.col.key].dict_owner
    combine = g.add(Task(ids(), "combine", owner, frozenset(p.task_id for p in partials), (0, 0),
                         placements[scan.col.key].strategy is Strategy.LOCAL,
                         tuple((p.home_vault, PARTIAL_BYTES) for p in partials), (), max(1, len(partials)),
                         plan, query_id))
    g.root_ids = [combine.task_id]
    return g


def run_task(task: Task, g: TaskGraph, cols: Mapping, outputs: Mapping[int, Any]) -> Any:
    """Compute one task's output from its dependencies' outputs."""
    deps = [g.tasks[d] for d in sorted(task.deps)]
    if task.kind == "pipe":
        s, e = task.segment
        return list(build_pipeline(task.node, cols, s, e))
    if task.kind == "build":
        acc: Counter = Counter()
        for it in outputs[deps[0].task_id]:
            acc[it.value] += it.weight
        return acc
    if task.kind == "probe":
        table: Counter = Counter()
        items = []
        for d in deps:
            if d.kind == "build":
                table.update(outputs[d.task_id])
            else:
                items = outputs[d.task_id]
        hits: Counter = Counter()
        for it in items:
            if it.value in table:
                hits[it.value] += table[it.value] * it.weight
        return hits
    if task.kind == "partial":
        src = outputs[deps[0].task_id]
        st = AggState()
        if isinstance(src, Counter):
            for v, w in sorted(src.items()):
                st.add(v, w)
        else:
            for it in src:
                st.add(it.value, it.weight)
        return st
    if task.kind == "combine":
        st = AggState()
        for d in deps:
            st = st.merge(outputs[d.task_id])
        return st.result(task.node.fn)
    return None


def assemble(g: TaskGraph, outputs: Mapping[int, Any]):
    """Answer in the same normal form as the reference evaluator."""
    if isinstance(g.root, Agg):
        return outputs[g.root_ids[0]]
    if isinstance(g.root, Join):
        acc: Counter = Counter()
        for t in g.root_ids:
            acc.update(outputs[t])
        return sorted(acc.items())
    rows = [(it.row, it.value) for t in g.root_ids for it in outputs[t]]
    return sorted(rows)
