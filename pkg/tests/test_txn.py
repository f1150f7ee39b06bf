import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from htapsim.errors import DeleteOfMissingRow, HtapError, InvalidKey
from htapsim.storage import Database, NsmTable, RecordKey
from htapsim.txn import READ, TxnIsland, TxnOp, UpdateKind


def island(rows=8, cols=3, threads=2, **kw):
    db = Database({0: NsmTable(0, np.arange(rows * cols).reshape(rows, cols))})
    return TxnIsland(db, threads, **kw)


def test_modify_logs_entry_and_read_your_writes():
    isl = island()
    k = RecordKey(0, 3, 1)
    r = isl.execute_txn_query(0, [TxnOp(k, UpdateKind.MODIFY, 42)])
    assert isl.db.table(0).get(3, 1) == 42
    (e,) = isl.logs[0].entries
    assert (e.commit, e.kind, e.data, e.key) == (r.commit, UpdateKind.MODIFY, 42, k)
    assert isl.execute_txn_query(0, [TxnOp(k, READ)]).reads == [42]


def test_double_delete():
    isl = island()
    k = RecordKey(0, 2, 0)
    isl.execute_txn_query(0, [TxnOp(k, UpdateKind.DELETE)])
    with pytest.raises(DeleteOfMissingRow):
        isl.execute_txn_query(0, [TxnOp(k, UpdateKind.DELETE)])


def test_delete_logs_every_column():
    isl = island(cols=3)
    isl.execute_txn_query(1, [TxnOp(RecordKey(0, 5, 2), UpdateKind.DELETE)])
    assert sorted(e.key.column_id for e in isl.logs[1].entries) == [0, 1, 2]
    assert len({e.commit for e in isl.logs[1].entries}) == 1


def test_failed_query_rolls_back():
    isl = island()
    with pytest.raises(InvalidKey):
        isl.execute_txn_query(0, [TxnOp(RecordKey(0, 1, 0), UpdateKind.MODIFY, 7),
                                  TxnOp(RecordKey(0, 99, 0), UpdateKind.MODIFY, 7)])
    assert isl.db.table(0).get(1, 0) == 3
    assert isl.pending_update_count() == 0 and isl.last_commit == 0


@pytest.mark.parametrize("pending,trigger", [(1023, False), (1024, True), (0, False)])
def test_propagation_trigger(pending, trigger):
    isl = island(rows=2000, cols=1)
    for i in range(pending):
        isl.execute_txn_query(i % 2, [TxnOp(RecordKey(0, i, 0), UpdateKind.MODIFY, i)])
    assert isl.pending_update_count() == pending
    assert isl.should_propagate() is trigger


def test_mark_shipped():
    isl = island()
    for i in range(4):
        isl.execute_txn_query(i % 2, [TxnOp(RecordKey(0, i, 0), UpdateKind.MODIFY, 1)])
    assert isl.mark_shipped(2) == 2
    assert isl.pending_update_count() == 2
    assert [e.commit for log in isl.pending_logs() for e in log] == [3, 4]


op_strategy = st.tuples(st.integers(0, 2), st.sampled_from(["mod", "del", "ins", "read"]),
                        st.integers(0, 11), st.integers(0, 2), st.integers(-50, 50))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(op_strategy, min_size=1, max_size=4), max_size=40))
def test_replay_reproduces_state_and_commits_increase(queries):
    isl = island(rows=10, cols=3, threads=3)
    initial = isl.db.table(0).copy()
    for q in queries:
        ops = []
        for _, kind, row, col, v in q:
            k = RecordKey(0, row, col)
            if kind == "mod":
                ops.append(TxnOp(k, UpdateKind.MODIFY, v))
            elif kind == "del":
                ops.append(TxnOp(k, UpdateKind.DELETE))
            elif kind == "ins":
                ops.append(TxnOp(k, UpdateKind.INSERT, [v, v + 1, v + 2]))
            else:
                ops.append(TxnOp(k, READ))
        try:
            isl.execute_txn_query(q[0][0], ops)
        except HtapError:
            pass
    for log in isl.logs:
        commits = [e.commit for e in log.entries]
        assert commits == sorted(commits)
    merged = sorted((e for log in isl.logs for e in log.entries), key=lambda e: e.commit)
    # a commit id belongs to exactly one thread
    owners = {}
    for log in isl.logs:
        for e in log.entries:
            assert owners.setdefault(e.commit, log.thread_id) == log.thread_id
    # replay in commit order; within a commit, in log order
    t = initial
    for e in merged:
        r, c = e.key.row_id, e.key.column_id
        if e.kind is UpdateKind.INSERT:
            if r == len(t):
                t.append([0] * t.n_columns)
            t.set(r, c, e.data)
        elif e.kind is UpdateKind.MODIFY:
            t.set(r, c, e.data)
        elif t.live[r]:
            t.delete(r)
    cur = isl.db.table(0)
    assert np.array_equal(t.live, cur.live)
    assert np.array_equal(t.rows[t.live], cur.rows[cur.live])
