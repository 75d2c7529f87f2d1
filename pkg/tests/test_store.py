"""Reservation store: feasibility, search, utilization, commit, and invariants."""

import threading
from concurrent.futures import ThreadPoolExecutor

import pytest

from fmsched.domain import Resource
from fmsched.store import ReservationStore, TimeslotTable

from conftest import brute_earliest, brute_max_overlap, occupancy_ok, rng


def make_store(caps={"m1": 1, "buf": 4}):
    kinds = {"m": "machine", "b": "buffer"}
    return ReservationStore(
        [Resource(rid, "machine" if cap == 1 else "buffer", "S", cap) for rid, cap in caps.items()]
    )


def commit_one(store, resource, start, end, wf="w", task="t", leg="machining"):
    r = store.make_reservation(resource, start, end, wf, task, leg)
    report = store.commit_batch([r])
    return r, report


class TestFeasibility:
    def test_empty_table(self):
        store = make_store()
        assert store.is_feasible("m1", 0, 10)

    def test_overlap_at_capacity_one(self):
        store = make_store()
        commit_one(store, "m1", 0, 10)
        assert not store.is_feasible("m1", 5, 15)
        assert store.is_feasible("m1", 10, 20)

    def test_capacity_pool(self):
        store = make_store()
        for i in range(3):
            commit_one(store, "buf", 0, 10, task=f"t{i}")
        assert store.is_feasible("buf", 0, 10)
        commit_one(store, "buf", 0, 10, task="t3")
        assert not store.is_feasible("buf", 0, 10)


class TestEarliestFeasible:
    def test_empty(self):
        store = make_store()
        assert store.earliest_feasible("m1", 0, 10, 1000) == 0

    def test_after_block(self):
        store = make_store()
        commit_one(store, "m1", 0, 10)
        assert store.earliest_feasible("m1", 0, 5, 1000) == 10

    def test_exact_gap(self):
        store = make_store()
        commit_one(store, "m1", 0, 10, task="a")
        commit_one(store, "m1", 20, 30, task="b")
        assert store.earliest_feasible("m1", 0, 10, 1000) == 10

    def test_matches_brute_force_scan(self):
        gen = rng(21)
        for _ in range(300):
            cap = int(gen.integers(1, 4))
            table = TimeslotTable("r", cap)
            n = int(gen.integers(0, 10))
            store = ReservationStore([Resource("r", "buffer", "S", cap)])
            for i in range(n):
                s = int(gen.integers(0, 150))
                e = s + int(gen.integers(1, 30))
                r = store.make_reservation("r", s, e, "w", f"t{i}", "machining")
                store.commit_batch([r])
            t = store.table("r")
            not_before = int(gen.integers(0, 100))
            duration = int(gen.integers(1, 25))
            horizon = int(gen.integers(not_before + 1, 200))
            got = t.earliest_feasible(not_before, duration, horizon)
            want = brute_earliest(list(t.starts), list(t.ends), cap, not_before, duration, horizon)
            assert got == want


class TestUtilization:
    def test_empty(self):
        store = make_store()
        assert store.utilization("m1", (0, 100)) == 0.0

    def test_fully_booked(self):
        store = make_store()
        commit_one(store, "m1", 0, 100)
        assert store.utilization("m1", (0, 100)) == 1.0

    def test_half_window_capacity_two(self):
        store = ReservationStore([Resource("b", "buffer", "S", 2)])
        commit_one(store, "b", 0, 50)
        assert store.utilization("b", (0, 100)) == 0.25


class TestCommitBatch:
    def test_three_ok(self):
        store = make_store()
        batch = [
            store.make_reservation("m1", i * 10, i * 10 + 10, "w", f"t{i}", "machining")
            for i in range(3)
        ]
        report = store.commit_batch(batch)
        assert report.ok and not report.conflicts
        assert len(store.table("m1")) == 3

    def test_atomic_failure_names_machine(self):
        store = make_store()
        batch = [
            store.make_reservation("m1", 0, 10, "w", "t0", "machining"),
            store.make_reservation("buf", 0, 10, "w", "t0", "buffering"),
            store.make_reservation("m1", 5, 15, "w", "t1", "machining"),
        ]
        report = store.commit_batch(batch)
        assert not report.ok
        assert report.conflicts == [("m1", (5, 15))]
        assert len(store.table("m1")) == 0 and len(store.table("buf")) == 0

    def test_duplicate_ids_rejected(self):
        store = make_store()
        r = store.make_reservation("m1", 0, 10, "w", "t", "machining")
        with pytest.raises(ValueError):
            store.commit_batch([r, r])

    def test_contention_exactly_one_winner(self):
        # two submitters, identical machine slot: mutual exclusion, 200 trials
        for trial in range(200):
            store = make_store()
            barrier = threading.Barrier(2)

            def submit(wf):
                r = store.make_reservation("m1", 0, 10, wf, "t", "machining")
                barrier.wait()
                return store.commit_batch(r and [r])

            with ThreadPoolExecutor(2) as pool:
                reports = list(pool.map(submit, ["wa", "wb"]))
            assert sum(r.ok for r in reports) == 1
            assert len(store.table("m1")) == 1


class TestReleaseTruncate:
    def test_release_inverse_of_commit(self):
        store = make_store()
        batch = [
            store.make_reservation("m1", 0, 10, "w", "t", "machining"),
            store.make_reservation("buf", 10, 20, "w", "t", "buffering"),
            store.make_reservation("buf", 0, 10, "w", "t", "transport-main"),
        ]
        assert store.commit_batch(batch).ok
        assert store.release("w") == 3
        assert all(len(t) == 0 for t in store.tables.values())

    def test_release_unknown_is_zero(self):
        store = make_store()
        assert store.release("ghost") == 0

    def test_release_then_recommit(self):
        store = make_store()
        r, report = commit_one(store, "m1", 0, 10)
        assert report.ok
        store.release("w")
        _, report2 = commit_one(store, "m1", 0, 10)
        assert report2.ok

    def test_truncate(self):
        store = make_store()
        r, _ = commit_one(store, "buf", 25, 85, leg="buffering")
        updated = store.truncate(r.id, 40)
        assert (updated.start, updated.end) == (25, 40)
        same = store.truncate(r.id, 40)
        assert same.end == 40
        with pytest.raises(ValueError):
            store.truncate(r.id, 25)
        with pytest.raises(ValueError):
            store.truncate(r.id, 90)


def test_random_operation_sequences_keep_capacity_invariant():
    # shortened version of the acceptance property (criterion runs 10k)
    gen = rng(22)
    for _ in range(300):
        caps = {"m1": 1, "m2": 1, "buf": int(gen.integers(2, 5))}
        store = make_store(caps)
        live = []
        for step in range(8):
            op = gen.integers(0, 4)
            if op <= 1:  # commit
                rid = ["m1", "m2", "buf"][int(gen.integers(0, 3))]
                s = int(gen.integers(0, 60))
                r = store.make_reservation(
                    rid, s, s + int(gen.integers(1, 20)), f"w{int(gen.integers(0, 4))}", f"t{step}", "machining"
                )
                if store.commit_batch([r]).ok:
                    live.append(r)
            elif op == 2 and live:  # release one workflow
                w = live[int(gen.integers(0, len(live)))].workflow
                store.release(w)
                live = [r for r in live if r.workflow != w]
            elif op == 3 and live:  # truncate
                r = live[int(gen.integers(0, len(live)))]
                new_end = int(gen.integers(r.start + 1, r.end + 1))
                store.truncate(r.id, new_end)
                live[live.index(r)] = r = r.__class__(**{**r.__dict__, "end": new_end})
            rows = [(r.resource, r.start, r.end) for t in store.tables.values() for r in t.entries]
            assert occupancy_ok(rows, caps)


def test_export_csv(tmp_path):
    store = make_store()
    commit_one(store, "m1", 0, 10, wf="w1", task="t1")
    path = tmp_path / "res.csv"
    store.export_csv(str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "workflow,task,leg,resource,start,end"
    assert lines[1] == "w1,t1,machining,m1,0,10"
