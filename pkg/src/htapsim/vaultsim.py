"""Virtual-time cost model of a vault-partitioned memory stack.

Every shared hardware path (a vault's port, the off-chip channel, an
accelerator) is a :class:`Resource` holding a calendar of reserved busy
intervals. Callers ask for the earliest slot of a given length at or after a
time; the returned completion times drive a deterministic event loop in which
logical threads are generators yielding the absolute time they next resume.
"""
from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Generator

from .errors import ConfigError, TimeRegression, UnknownVault

HOST = "host"


@dataclass(frozen=True)
class SimConfig:
    n_vaults: int = 16
    group_size: int = 4
    per_vault_bw: float = 16.0  # bytes/ns == GB/s
    offchip_bw: float = 32.0
    local_latency: float = 50.0
    remote_hop_latency: float = 25.0
    host_latency: float = 100.0
    pim_threads_per_vault: int = 4
    pim_ns_per_tuple: float = 1.0
    host_ns_per_tuple: float = 0.5
    txn_op_ns: float = 50.0  # host compute per transactional operation
    recode_ns_per_tuple: float = 0.25  # accelerator recode throughput
    host_threads: int = 16
    host_mlp: int = 4  # outstanding dependent misses a host core overlaps
    copy_chunk: int = 256
    tracking_buffer: int = 16  # chunks in flight per copy
    merge_ns_per_entry: float = 1.0
    hash_ns: float = 1.0
    probe_units: int = 4
    monitor_dispatch_ns: float = 10.0
    replication_threshold: int = 32
    segment_rows: int = 1000

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v < 0:
                raise ConfigError(f"{f.name} must be >= 0, got {v}")
        for name in ("n_vaults", "group_size", "per_vault_bw", "offchip_bw", "pim_threads_per_vault",
                     "host_threads", "host_mlp", "copy_chunk", "tracking_buffer", "probe_units",
                     "segment_rows"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.n_vaults % self.group_size:
            raise ConfigError(f"n_vaults={self.n_vaults} not divisible by group_size={self.group_size}")

    @property
    def n_groups(self) -> int:
        return self.n_vaults // self.group_size

    def scaled_latencies(self, factor: float, which: tuple[str, ...] = ("local_latency", "remote_hop_latency",
                                                                        "host_latency")) -> "SimConfig":
        return replace(self, **{k: getattr(self, k) * factor for k in which})

    def with_overrides(self, **kw: Any) -> "SimConfig":
        try:
            return replace(self, **kw)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def dump(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in asdict(self).items())

    @classmethod
    def parse(cls, text: str, base: "SimConfig | None" = None) -> "SimConfig":
        base = base or cls()
        types = {f.name: type(getattr(base, f.name)) for f in fields(cls)}
        kw: dict[str, Any] = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected key=value, got {raw!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            if k not in types:
                raise ConfigError(f"line {n}: unknown key {k!r}")
            try:
                kw[k] = types[k](v) if types[k] is float else int(v)
            except ValueError:
                raise ConfigError(f"line {n}: bad value for {k}: {v!r}") from None
        return base.with_overrides(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "SimConfig":
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        return cls.parse(text)


def _fmt(v: Any) -> str:
    return repr(v) if isinstance(v, float) else str(v)


PRESET_DIR = Path(__file__).with_name("configs")


def preset(name: str) -> SimConfig:
    path = PRESET_DIR / f"{name}.conf"
    if not path.exists():
        raise ConfigError(f"no preset named {name!r}")
    return SimConfig.load(path)


class Resource:
    """A single-ported resource with a calendar of busy intervals.

    Reservations may be made out of time order; each one takes the earliest
    gap of sufficient length at or after its requested start.
    """

    __slots__ = ("rid", "name", "_starts", "_ends", "busy_ns", "bytes", "_floor")

    def __init__(self, rid: int, name: str):
        self.rid = rid
        self.name = name
        self._starts: list[float] = []
        self._ends: list[float] = []
        self.busy_ns = 0.0
        self.bytes = 0
        self._floor = 0.0

    def reserve(self, earliest: float, duration: float, nbytes: int = 0) -> float:
        """Book ``duration`` ns; return the start time."""
        self.bytes += nbytes
        if duration <= 0:
            return earliest
        self.busy_ns += duration
        starts, ends = self._starts, self._ends
        t = max(earliest, self._floor)
        i = bisect.bisect_right(ends, t)
        while i < len(starts):
            if starts[i] - t >= duration:
                break
            t = max(t, ends[i])
            i += 1
        # Insert [t, t+duration) at position i and coalesce with neighbours.
        begin = t
        end = t + duration
        if i > 0 and ends[i - 1] == t:
            i -= 1
            t = starts[i]
            del starts[i], ends[i]
        if i < len(starts) and starts[i] == end:
            end = ends[i]
            del starts[i], ends[i]
        starts.insert(i, t)
        ends.insert(i, end)
        return begin

    def prune(self, before: float) -> None:
        """Forget intervals entirely before ``before``; later bookings start no earlier."""
        self._floor = max(self._floor, before)
        k = bisect.bisect_right(self._ends, before)
        if k:
            del self._starts[:k], self._ends[:k]

    def free_at(self, t: float) -> float:
        """Earliest time >= ``t`` not inside a reserved interval."""
        i = bisect.bisect_right(self._ends, t)
        if i < len(self._starts) and self._starts[i] <= t:
            return self._ends[i]
        return t

    @property
    def busy_until(self) -> float:
        return self._ends[-1] if self._ends else self._floor

    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self._starts, self._ends))


class Topology:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg

    def check(self, vault: int) -> None:
        if not isinstance(vault, int) or not (0 <= vault < self.cfg.n_vaults):
            raise UnknownVault(vault)

    def group_of(self, vault: int) -> int:
        self.check(vault)
        return vault // self.cfg.group_size

    def group_vaults(self, group: int) -> range:
        g = self.cfg.group_size
        return range(group * g, (group + 1) * g)

    def hops(self, a: int, b: int) -> int:
        """0 within a vault, 1 within a group, 2 across groups."""
        if a == b:
            return 0
        return 1 if self.group_of(a) == self.group_of(b) else 2


class EventLoop:
    """Discrete-event loop over a virtual nanosecond clock.

    Equal-time events run in ``(resource_id, sequence)`` order.
    """

    def __init__(self):
        self.now = 0.0
        self._heap: list[tuple[float, int, int, Any]] = []
        self._seq = 0

    def schedule(self, time: float, resource_id: int, payload: Any) -> None:
        if time < self.now:
            raise TimeRegression(f"event at {time} before now={self.now}")
        heapq.heappush(self._heap, (time, resource_id, self._seq, payload))
        self._seq += 1

    def advance(self) -> Any:
        """Pop the next event, move the clock to it, and return its payload (None if idle)."""
        if not self._heap:
            return None
        time, _, _, payload = heapq.heappop(self._heap)
        self.now = time
        return payload

    def __len__(self) -> int:
        return len(self._heap)

    def peek_time(self) -> float | None:
        return self._heap[0][0] if self._heap else None

    def spawn(self, actor: Generator[Any, None, Any], at: float | None = None, rid: int = 0) -> None:
        self.schedule(self.now if at is None else at, rid, _Resume(actor, rid))

    def call_at(self, time: float, fn: Callable[[float], None], rid: int = 0) -> None:
        self.schedule(time, rid, fn)

    def step(self) -> bool:
        """Run one event; False when the loop is empty."""
        if not self._heap:
            return False
        payload = self.advance()
        if isinstance(payload, _Resume):
            self._resume(payload)
        elif callable(payload):
            payload(self.now)
        return True

    def _resume(self, r: "_Resume") -> None:
        try:
            wake = r.actor.send(r.value)
        except StopIteration:
            return
        r.value = None
        if isinstance(wake, Signal):
            wake._waiters.append(r)
            if wake.fired is not None:
                wake._flush(self)
            return
        if wake < self.now:
            raise TimeRegression(f"actor yielded {wake} before now={self.now}")
        self.schedule(wake, r.rid, r)

    def run(self, until: float = math.inf) -> float:
        """Process events up to ``until``; actors yield an absolute wake time or a :class:`Signal`."""
        while self._heap and self._heap[0][0] <= until:
            self.step()
        return self.now


class _Resume:
    __slots__ = ("actor", "rid", "value")

    def __init__(self, actor, rid: int):
        self.actor = actor
        self.rid = rid
        self.value = None


class Signal:
    """One-shot event an actor can yield to wait on; resumes with the fired value."""

    def __init__(self):
        self.fired: float | None = None
        self.value: Any = None
        self._waiters: list[_Resume] = []

    def fire(self, loop: EventLoop, time: float, value: Any = None) -> None:
        self.fired = time
        self.value = value
        self._flush(loop)

    def _flush(self, loop: EventLoop) -> None:
        for r in self._waiters:
            r.value = self.value
            loop.schedule(max(self.fired, loop.now), r.rid, r)
        self._waiters.clear()


class Machine:
    """Bundle of resources with the access and copy charging rules."""

    def __init__(self, cfg: SimConfig | None = None):
        self.cfg = cfg or SimConfig()
        self.topo = Topology(self.cfg)
        self.loop = EventLoop()
        n = self.cfg.n_vaults
        self.ports = [Resource(i, f"vault{i}") for i in range(n)]
        self.offchip = Resource(n, "offchip")
        self._next_rid = n + 1
        self.extra: dict[str, Resource] = {}
        self.onchip_bytes = 0
        self.offchip_bytes = 0

    def resource(self, name: str) -> Resource:
        r = self.extra.get(name)
        if r is None:
            r = self.extra[name] = Resource(self._next_rid, name)
            self._next_rid += 1
        return r

    def prune(self) -> None:
        now = self.loop.now
        for r in self.ports:
            r.prune(now)
        self.offchip.prune(now)

    def charge_access(self, vault: int, nbytes: int, origin: int | str, start: float | None = None) -> float:
        """Move ``nbytes`` between ``vault`` and ``origin``; return completion time."""
        cfg = self.cfg
        self.topo.check(vault)
        if nbytes < 0:
            raise ValueError("bytes must be >= 0")
        t = self.loop.now if start is None else start
        xfer = nbytes / cfg.per_vault_bw
        if origin == HOST:
            off = nbytes / cfg.offchip_bw
            s1 = self.offchip.reserve(t, off, nbytes)
            s2 = self.ports[vault].reserve(s1, xfer, nbytes)
            self.offchip_bytes += nbytes
            return max(s1 + off, s2 + xfer) + cfg.host_latency
        self.topo.check(origin)
        s = self.ports[vault].reserve(t, xfer, nbytes)
        self.onchip_bytes += nbytes
        return s + xfer + cfg.local_latency + self.topo.hops(vault, origin) * cfg.remote_hop_latency

    def charge_host_bytes(self, nbytes: int, start: float | None = None, *, latency: bool = True) -> float:
        """Stream bytes across the off-chip channel only (host-side memory traffic)."""
        t = self.loop.now if start is None else start
        d = nbytes / self.cfg.offchip_bw
        s = self.offchip.reserve(t, d, nbytes)
        self.offchip_bytes += nbytes
        return s + d + (self.cfg.host_latency if latency and nbytes else 0.0)

    def charge_copy(self, src: int, dst: int, nbytes: int, start: float | None = None) -> float:
        """Copy-unit transfer: chunked reads from ``src`` pipelined with posted writes to ``dst``.

        At most ``tracking_buffer`` chunks are outstanding; each chunk's data
        arrives after the access latency plus hop latency between the vaults.
        """
        cfg = self.cfg
        self.topo.check(src)
        self.topo.check(dst)
        t0 = self.loop.now if start is None else start
        if nbytes <= 0:
            return t0
        hop = self.topo.hops(src, dst) * cfg.remote_hop_latency
        n_chunks = math.ceil(nbytes / cfg.copy_chunk)
        done: list[float] = []
        finish = t0
        issue = t0
        for i in range(n_chunks):
            size = min(cfg.copy_chunk, nbytes - i * cfg.copy_chunk)
            d = size / cfg.per_vault_bw
            if i >= cfg.tracking_buffer:
                issue = max(issue, done[i - cfg.tracking_buffer])
            rs = self.ports[src].reserve(issue, d, size)
            arrive = rs + d + cfg.local_latency + hop
            ws = self.ports[dst].reserve(arrive, d, size)
            done.append(ws + d)
            finish = max(finish, ws + d)
            issue = rs + d
        self.onchip_bytes += 2 * nbytes
        return finish

    def charge_host_copy(self, nbytes: int, start: float | None = None) -> float:
        """Host memcpy: read and write both cross the off-chip channel."""
        if nbytes <= 0:
            return self.loop.now if start is None else start
        return self.charge_host_bytes(2 * nbytes, start)
