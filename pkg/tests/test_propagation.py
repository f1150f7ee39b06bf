import random

import pytest
from hypothesis import given, settings, strategies as st

from htapsim.errors import KeyNotIndexed, UnsortedInputLog
from htapsim.propagation import (ColumnLocation, HashIndex, bucket_count, hash_key, lookup_column, merge_logs,
                                 probe_timeline, ship, ship_with_stats)
from htapsim.storage import RecordKey
from htapsim.txn import UpdateKind, UpdateLogEntry

from oracles import merge_oracle, partition_oracle


def entry(c, row=0, col=0, value=0, kind=UpdateKind.MODIFY):
    return UpdateLogEntry(c, kind, value, RecordKey(0, row, col))


def test_two_way_merge():
    out = merge_logs([[entry(1), entry(4)], [entry(2), entry(3)]])
    assert [e.commit for e in out.entries] == [1, 2, 3, 4]


def test_single_log_identity():
    log = [entry(c, row=c) for c in (1, 5, 9)]
    assert merge_logs([log]).entries == log


def test_nine_logs_two_passes():
    rng = random.Random(3)
    commits = rng.sample(range(1, 10_000), 1800)
    rng.shuffle(commits)
    logs = [sorted(entry(c) for c in commits[i * 200:(i + 1) * 200]) for i in range(9)]
    out = merge_logs(logs, 1024)
    assert out.entries == merge_oracle(logs, 1024)
    assert len(out) == 1024 and out.passes == 2


def test_unsorted_input_rejected():
    with pytest.raises(UnsortedInputLog):
        merge_logs([[entry(3), entry(2)]])


def test_commit_group_not_split():
    logs = [[entry(1), entry(2, col=0), entry(2, col=1), entry(2, col=2)]]
    out = merge_logs(logs, capacity=2)
    assert [e.commit for e in out.entries] == [1]


log_sets = st.lists(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 40)), max_size=60),
                    min_size=1, max_size=20)


def build_logs(spec):
    """Per-thread logs with globally unique commits; groups of 1-3 entries share a commit."""
    commit = 0
    order = [(t, g) for t, log in enumerate(spec) for g in log]
    random.Random(len(order)).shuffle(order)
    logs = [[] for _ in spec]
    for t, (size, row) in order:
        commit += 1
        logs[t].extend(entry(commit, row=row, col=c) for c in range(size))
    return logs


@settings(max_examples=150, deadline=None)
@given(log_sets, st.sampled_from([1, 7, 64, 1024]))
def test_merge_matches_sort_oracle(spec, cap):
    logs = build_logs(spec)
    assert merge_logs(logs, cap).entries == merge_oracle(logs, cap)


@pytest.mark.parametrize("col,row,n,expected", [(3, 12, 8, 7), (0, 0, 8, 0), (0, 0, 1, 0), (0, 5, 4, 1)])
def test_hash_key(col, row, n, expected):
    assert hash_key(col, row, n) == expected


def test_hash_key_arithmetic():
    assert 3 * 2654435761 + 12 == 7963307295


def test_bucket_count():
    assert bucket_count(1000) == 256
    assert bucket_count(1) == 1
    assert bucket_count(16000) == 4096


def test_lookup_indexed_and_missing():
    idx = HashIndex.build(0, 2, 10)
    assert lookup_column(idx, RecordKey(0, 4, 1)) == ColumnLocation(0, 1, 0)
    with pytest.raises(KeyNotIndexed):
        lookup_column(idx, RecordKey(0, 10, 0))


def test_collision_chain():
    idx = HashIndex(0, 8)
    idx.insert(0, 1)
    idx.insert(0, 9)  # 9 mod 8 == 1
    assert idx.chain_length(1) == 2
    assert idx.probe(0, 1)[1] == 1 and idx.probe(0, 9)[1] == 2
    assert lookup_column(idx, (0, 9)) == ColumnLocation(0, 0, 0)


def test_partition_locations():
    idx = HashIndex.build(2, 1, 25, partition_rows=10)
    assert lookup_column(idx, (0, 24)).partition_id == 2


def test_ship_interleaved_columns():
    idx = HashIndex.build(0, 2, 10)
    fin = merge_logs([[entry(1, col=0), entry(2, col=1), entry(3, col=0), entry(4, col=1)]])
    bufs = ship(fin, idx)
    assert len(bufs) == 2
    for b in bufs:
        commits = [u[3] for u in b.updates]
        assert commits == sorted(commits) and len(commits) == 2


def test_ship_empty():
    assert ship(merge_logs([[]]), HashIndex.build(0, 1, 4)) == []


def test_ship_single_column_1024():
    idx = HashIndex.build(0, 1, 2000)
    fin = merge_logs([[entry(c, row=c % 2000) for c in range(1, 1025)]])
    (buf,) = ship(fin, idx)
    assert buf.updates == [(e.key.row_id, e.kind, e.data, e.commit) for e in fin.entries]


@settings(max_examples=100, deadline=None)
@given(log_sets)
def test_ship_partition_property(spec):
    logs = build_logs(spec)
    idx = HashIndex.build(0, 3, 41, partition_rows=16)
    fin = merge_logs(logs, 1024)
    res = ship_with_stats(fin, idx)
    expected = partition_oracle(fin.entries, lambda e: lookup_column(idx, e.key))
    assert [(b.location, b.updates) for b in res.buffers] == list(expected.items())
    flat = sorted(((u[3], u) for b in res.buffers for u in b.updates), key=lambda x: x[0])
    assert [u for _, u in flat] == [(e.key.row_id, e.kind, e.data, e.commit) for e in fin.entries]
    assert len(res.nodes) == len(fin) and all(n >= 1 for n in res.nodes)


def test_ship_registers_inserts():
    idx = HashIndex.build(0, 2, 3)
    fin = merge_logs([[entry(1, row=3, col=0, kind=UpdateKind.INSERT), entry(1, row=3, col=1, kind=UpdateKind.INSERT)]])
    assert len(ship(fin, idx)) == 2
    assert (1, 3) in idx


def test_probe_timeline_in_order_retirement():
    # a long walk first holds back the short ones behind it
    t = probe_timeline([10, 1, 1], node_ns=5.0, hash_ns=1.0, units=4)
    assert t == [51.0, 51.0, 51.0]
    t = probe_timeline([1, 1, 1, 1, 1], node_ns=4.0, hash_ns=1.0, units=1)
    assert t == [5.0, 9.0, 13.0, 17.0, 21.0]
