"""Random inputs shared by the module tests and the acceptance suite."""
from __future__ import annotations

import random

import numpy as np

from htapsim.analytics.tasks import Task
from htapsim.storage import TOMBSTONE, Dictionary, EncodedColumn


def random_dag(rng: random.Random, n_vaults: int = 16, max_tasks: int = 60) -> dict[int, Task]:
    """Tasks with edges only from lower to higher ids, random homes, sizes and pinning."""
    n = rng.randint(1, max_tasks)
    tasks = {}
    for i in range(n):
        deps = frozenset(j for j in range(i) if rng.random() < min(0.5, 3.0 / (i + 1)))
        home = rng.randrange(n_vaults)
        reads = tuple((rng.randrange(n_vaults), rng.randrange(0, 4096)) for _ in range(rng.randint(0, 2)))
        tasks[i] = Task(i, "generic", home, deps, (0, 0), rng.random() < 0.2, reads, (),
                        rng.randint(0, 2000))
    return tasks


def random_column(rng: np.random.Generator, n: int, distinct: int, dead: float = 0.0) -> EncodedColumn:
    values = np.sort(rng.choice(10 * distinct + 1, size=distinct, replace=False)).astype(np.int64)
    codes = rng.integers(0, distinct, size=n).astype(np.uint32)
    if dead:
        codes[rng.random(n) < dead] = TOMBSTONE
    return EncodedColumn(codes, Dictionary(values))


def random_plan(rng: random.Random, tables: int, columns: int, domain: int) -> str:
    t = rng.randrange(tables)

    def col(tt=None):
        return f"T{t if tt is None else tt}.C{rng.randrange(columns)}"

    def stream(tt=None):
        tt = t if tt is None else tt
        s = f"SCAN {col(tt)}"
        for _ in range(rng.randint(0, 2)):
            op = rng.choice(["lt", "le", "gt", "ge", "eq", "ne"])
            s = f"FILTER col={col(tt)} {op} {rng.randrange(domain)} ({s})"
        if rng.random() < 0.4:
            s = f"SELECT {col(tt)} ({s})"
        return s

    body = stream()
    if rng.random() < 0.3:
        body = f"JOIN ({body}) ({stream(rng.randrange(tables))})"
    if rng.random() < 0.6:
        body = f"AGG {rng.choice(['sum', 'count', 'min', 'max'])} ({body})"
    return body
