"""Assigning column partitions and dictionary copies to vaults."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from ..vaultsim import Topology


class Strategy(enum.Enum):
    LOCAL = "local"
    DISTRIBUTED = "distributed"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class Partition:
    start: int
    end: int
    vault: int


@dataclass(frozen=True)
class PlacementPlan:
    strategy: Strategy
    partitions: tuple[Partition, ...]
    dict_vaults: frozenset[int]
    dict_owner: int

    def vault_of_row(self, row: int) -> int:
        for p in self.partitions:
            if p.start <= row < p.end:
                return p.vault
        return self.partitions[-1].vault

    def vaults_for(self, start: int, end: int) -> list[tuple[int, int]]:
        """``(vault, rows)`` pairs covering ``[start, end)``."""
        out = []
        for p in self.partitions:
            lo, hi = max(start, p.start), min(end, p.end)
            if hi > lo:
                out.append((p.vault, hi - lo))
        if not out and end > start:
            out.append((self.partitions[-1].vault, end - start))
        return out

    @property
    def group_vaults(self) -> tuple[int, ...]:
        return tuple(sorted({p.vault for p in self.partitions}))


def _split(n_rows: int, vaults: list[int]) -> tuple[Partition, ...]:
    k = len(vaults)
    base, extra = divmod(n_rows, k)
    parts, start = [], 0
    for i, v in enumerate(vaults):
        size = base + (1 if i < extra else 0)
        parts.append(Partition(start, start + size, v))
        start += size
    return tuple(parts)


def place(ordinal: int, n_rows: int, strategy: Strategy | str, topo: Topology,
          dict_size: int = 0) -> PlacementPlan:
    """Deterministic round-robin placement of the column with global index ``ordinal``."""
    strategy = Strategy(strategy)
    cfg = topo.cfg
    if strategy is Strategy.LOCAL:
        v = ordinal % cfg.n_vaults
        return PlacementPlan(strategy, (Partition(0, n_rows, v),), frozenset({v}), v)
    if strategy is Strategy.DISTRIBUTED:
        owner = ordinal % cfg.n_vaults
        return PlacementPlan(strategy, _split(n_rows, list(range(cfg.n_vaults))), frozenset({owner}), owner)
    group = ordinal % cfg.n_groups
    vaults = list(topo.group_vaults(group))
    owner = vaults[0]
    copies = frozenset(vaults) if dict_size <= cfg.replication_threshold else frozenset({owner})
    return PlacementPlan(strategy, _split(n_rows, vaults), copies, owner)
