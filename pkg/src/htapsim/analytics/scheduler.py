"""Running task DAGs on the vault-side threads.

In ``basic`` mode every vault group has a monitor thread that pushes ready
tasks, one at a time, onto the group's queue; only that group's remaining
threads run them. In ``optimized`` mode all threads pull: first from their
own group's queue front, then by stealing from the back of other groups'
queues in round-robin order. A thread reading data outside its vault pays
the remote-access cost through the machine model.

Tasks placed with the Local strategy are pinned to their vault in both
modes since their whole column lives there.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Iterable, NamedTuple

from ..errors import CyclicDependency
from ..vaultsim import Machine, SimConfig, Signal
from .tasks import Task, TaskGraph

BASIC = "basic"
OPTIMIZED = "optimized"


class TraceEntry(NamedTuple):
    task_id: int
    thread: int
    start: float
    end: float


@dataclass
class Schedule:
    trace: list[TraceEntry]
    makespan: float
    steals: int = 0


def check_acyclic(tasks: dict[int, Task]) -> list[int]:
    """Kahn's algorithm; returns a topological order or raises."""
    indeg = {t: 0 for t in tasks}
    children: dict[int, list[int]] = {t: [] for t in tasks}
    for t in tasks.values():
        for d in t.deps:
            if d not in tasks:
                raise CyclicDependency(f"task {t.task_id} depends on unknown task {d}")
            indeg[t.task_id] += 1
            children[d].append(t.task_id)
    ready = deque(sorted(t for t, n in indeg.items() if n == 0))
    order = []
    while ready:
        t = ready.popleft()
        order.append(t)
        for c in children[t]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != len(tasks):
        raise CyclicDependency(f"{len(tasks) - len(order)} tasks lie on a dependency cycle")
    return order


class PimScheduler:
    """Shared pool of vault threads serving task graphs submitted over time."""

    def __init__(self, machine: Machine, mode: str = OPTIMIZED, *, rid: int = 1):
        if mode not in (BASIC, OPTIMIZED):
            raise ValueError(f"unknown scheduler mode {mode!r}")
        self.m = machine
        self.cfg: SimConfig = machine.cfg
        self.mode = mode
        self.rid = rid
        cfg = self.cfg
        self.tpv = cfg.pim_threads_per_vault
        self.n_threads = cfg.n_vaults * self.tpv
        self.group_q: list[deque[Task]] = [deque() for _ in range(cfg.n_groups)]
        self.vault_q: list[deque[Task]] = [deque() for _ in range(cfg.n_vaults)]
        self.monitor_free = [0.0] * cfg.n_groups
        self.monitors = set()
        if mode == BASIC:
            for g in range(cfg.n_groups):
                first = g * cfg.group_size * self.tpv
                if cfg.group_size * self.tpv > 1:
                    self.monitors.add(first)
        self.idle = set(t for t in range(self.n_threads))
        self.trace: list[TraceEntry] = []
        self.steals = 0
        self._steal_cursor = [0] * cfg.n_groups
        self._graphs: dict[int, "_Job"] = {}

    def vault_of(self, thread: int) -> int:
        return thread // self.tpv

    def group_of_thread(self, thread: int) -> int:
        return self.vault_of(thread) // self.cfg.group_size

    def _may_run(self, thread: int) -> bool:
        if thread not in self.monitors:
            return True
        # A monitor still runs pinned work if it is its vault's only thread.
        return self.tpv == 1

    # submission ---------------------------------------------------------

    def submit(self, tasks: TaskGraph | Iterable[Task], at: float | None = None,
               on_task: Callable[[Task, float], None] | None = None) -> Signal:
        """Queue a DAG; the returned signal fires with the finish time when all its tasks end."""
        tmap = tasks.tasks if isinstance(tasks, TaskGraph) else {t.task_id: t for t in tasks}
        check_acyclic(tmap)
        job = _Job(tmap, Signal(), on_task)
        for tid in tmap:
            if tid in self._graphs:
                raise ValueError(f"task id {tid} already submitted")
            self._graphs[tid] = job
        t0 = self.m.loop.now if at is None else at
        if not tmap:
            self.m.loop.call_at(t0, lambda now: job.done.fire(self.m.loop, now, now), self.rid)
            return job.done
        for tid in sorted(tmap):
            if job.indeg[tid] == 0:
                self.m.loop.call_at(t0, self._releaser(tmap[tid]), self.rid)
        return job.done

    def _releaser(self, task: Task):
        return lambda now: self._release(task, now)

    def _release(self, task: Task, now: float) -> None:
        """A task's dependencies are done: hand it to a queue (through the monitor in basic mode)."""
        if self.mode == BASIC:
            g = task.home_vault // self.cfg.group_size
            t = max(now, self.monitor_free[g]) + self.cfg.monitor_dispatch_ns
            self.monitor_free[g] = t
            self.m.loop.call_at(t, lambda n, task=task: self._enqueue(task, n), self.rid)
        else:
            self._enqueue(task, now)

    def _enqueue(self, task: Task, now: float) -> None:
        if task.pinned:
            self.vault_q[task.home_vault].append(task)
        else:
            self.group_q[task.home_vault // self.cfg.group_size].append(task)
        self._wake(now, task)

    def _wake(self, now: float, task: Task) -> None:
        home_group = task.home_vault // self.cfg.group_size
        order = sorted(self.idle, key=lambda t: (self.group_of_thread(t) != home_group, t))
        for th in order:
            if th in self.idle and self._try_run(th, now):
                if not any(self.group_q) and not any(self.vault_q):
                    return

    # execution ----------------------------------------------------------

    def _pick(self, thread: int) -> tuple[Task | None, bool]:
        if not self._may_run(thread):
            return None, False
        v = self.vault_of(thread)
        g = v // self.cfg.group_size
        if self.vault_q[v]:
            return self.vault_q[v].popleft(), False
        if thread in self.monitors:
            return None, False
        if self.group_q[g]:
            return self.group_q[g].popleft(), False
        if self.mode == OPTIMIZED:
            n = self.cfg.n_groups
            start = self._steal_cursor[g]
            for k in range(1, n):
                victim = (g + start + k) % n
                if victim == g:
                    continue
                if self.group_q[victim]:
                    self._steal_cursor[g] = (start + k) % n
                    return self.group_q[victim].pop(), True
        return None, False

    def _try_run(self, thread: int, now: float) -> bool:
        task, stolen = self._pick(thread)
        if task is None:
            return False
        self.idle.discard(thread)
        self.steals += stolen
        end = self.task_end(task, self.vault_of(thread), now)
        self.trace.append(TraceEntry(task.task_id, thread, now, end))
        self.m.loop.call_at(end, lambda n, task=task, th=thread: self._finish(task, th, n), self.rid)
        return True

    def task_end(self, task: Task, vault: int, start: float) -> float:
        m = self.m
        ready = start
        for dv, nbytes in task.reads:
            ready = max(ready, m.charge_access(dv, nbytes, vault, start))
        for copies, nbytes in task.dict_reads:
            if nbytes <= 0 or not copies:
                continue
            src = vault if vault in copies else min(copies, key=lambda c: (m.topo.hops(c, vault), c))
            ready = max(ready, m.charge_access(src, nbytes, vault, start))
        return ready + task.tuples * self.cfg.pim_ns_per_tuple

    def _finish(self, task: Task, thread: int, now: float) -> None:
        job = self._graphs.pop(task.task_id)
        if job.on_task is not None:
            job.on_task(task, now)
        job.remaining -= 1
        for c in job.children[task.task_id]:
            job.indeg[c] -= 1
            if job.indeg[c] == 0:
                self._release(job.tasks[c], now)
        if job.remaining == 0:
            job.done.fire(self.m.loop, now, now)
        self.idle.add(thread)
        self._try_run(thread, now)


class _Job:
    def __init__(self, tasks: dict[int, Task], done: Signal, on_task):
        self.tasks = tasks
        self.done = done
        self.on_task = on_task
        self.remaining = len(tasks)
        self.indeg = {t: len(x.deps) for t, x in tasks.items()}
        self.children: dict[int, list[int]] = {t: [] for t in tasks}
        for x in tasks.values():
            for d in sorted(x.deps):
                self.children[d].append(x.task_id)


def schedule(tasks: TaskGraph | Iterable[Task], mode: str = OPTIMIZED, cfg: SimConfig | None = None, *,
             machine: Machine | None = None, on_task: Callable[[Task, float], None] | None = None) -> Schedule:
    """Run one DAG to completion on an otherwise idle machine and return its trace."""
    m = machine or Machine(cfg)
    sched = PimScheduler(m, mode)
    start = m.loop.now
    sched.submit(tasks, on_task=on_task)
    m.loop.run()
    makespan = max((e.end for e in sched.trace), default=start) - start
    return Schedule(sched.trace, makespan, sched.steals)


def execute_graph(g: TaskGraph, cols, mode: str = OPTIMIZED, cfg: SimConfig | None = None,
                  machine: Machine | None = None) -> tuple[Any, Schedule]:
    """Schedule a query DAG and compute its answer, running each task when the trace finishes it."""
    from .tasks import assemble, run_task

    outputs: dict[int, Any] = {}

    def on_task(task: Task, _now: float) -> None:
        outputs[task.task_id] = run_task(task, g, cols, outputs)

    sched = schedule(g, mode, cfg, machine=machine, on_task=on_task)
    return assemble(g, outputs), sched
